#include "pinnobs/loss.hpp"

#include <algorithm>

#include "pinnobs/loss_kernel.hpp"

namespace pinnobs {

void LossWeights::validate() const
{
	if (!(w0 >= 0.0) || !(w_ode >= 0.0) || !(w_y >= 0.0)) {
		throw ContractError("loss weights must be non-negative");
	}
}

LossBreakdown LossBreakdown::combine(double mse0, double mseg, double msey,
                                     const LossWeights &w)
{
	return {w.w0 * mse0 + w.w_ode * mseg + w.w_y * msey, mse0, mseg, msey};
}

LossProblem make_loss_problem(const TrainingDataset &ds, const SystemModel &sys,
                              const CollocationSpec &colloc, Mse0Mode mode)
{
	if (ds.train.empty()) {
		throw ContractError("loss: empty training set");
	}
	if (ds.train.front() != 0) {
		throw ContractError("loss: training set must contain t0");
	}
	if (ds.m != sys.m || ds.xhat0.size() != sys.n_x) {
		throw ContractError("loss: dataset does not match the system dimensions");
	}
	LossProblem p;
	p.n_x = sys.n_x;
	p.m = sys.m;
	p.xhat0 = ds.xhat0;
	p.mse0_mode = mode;
	p.anchor = 0;

	const double n_train = static_cast<double>(ds.train.size());
	const bool colloc_on_data = colloc.kind == CollocationSpec::Kind::train;
	for (std::size_t i : ds.train) {
		p.times.push_back(ds.times[i]);
		const auto y = ds.measurement(i);
		p.y.insert(p.y.end(), y.begin(), y.end());
		p.data_weight.push_back(1.0 / n_train);
		p.residual_weight.push_back(colloc_on_data ? 1.0 / n_train : 0.0);
	}

	if (!colloc_on_data) {
		if (colloc.count == 0) {
			throw ContractError("uniform collocation needs a positive point count");
		}
		// Measurements at collocation times come from the training samples only.
		std::vector<double> ty, yy;
		for (std::size_t i : ds.train) {
			ty.push_back(ds.times[i]);
			const auto y = ds.measurement(i);
			yy.insert(yy.end(), y.begin(), y.end());
		}
		const double t_lo = ty.front(), t_hi = ty.back();
		const MeasurementSeries series(std::move(ty), std::move(yy), ds.m);
		const double w = 1.0 / static_cast<double>(colloc.count);
		std::vector<double> y(ds.m);
		for (std::size_t k = 0; k < colloc.count; ++k) {
			const double t = colloc.count == 1
			                     ? t_lo
			                     : t_lo + (t_hi - t_lo) * static_cast<double>(k) /
			                                  static_cast<double>(colloc.count - 1);
			series.at(t, y);
			p.times.push_back(t);
			p.y.insert(p.y.end(), y.begin(), y.end());
			p.data_weight.push_back(0.0);
			p.residual_weight.push_back(w);
		}
	}
	return p;
}

std::vector<double> residual(const NetworkParams &params, const SystemModel &sys, double t,
                             std::span<const double> y)
{
	if (y.size() != sys.m) {
		throw ContractError("residual: measurement has wrong length");
	}
	const auto out = forward_with_time_derivative(params, t, sys.n_x, sys.m);
	std::vector<double> f(sys.n_x), bu(sys.n_x), e(sys.m);
	sys.drift(out.state, t, f);
	forcing(sys, t, bu);
	output(sys, out.state, e);
	for (std::size_t j = 0; j < sys.m; ++j) e[j] -= y[j];

	std::vector<double> g(sys.n_x);
	for (std::size_t i = 0; i < sys.n_x; ++i) {
		double gi = out.state_rate[i] - f[i] - bu[i];
		for (std::size_t j = 0; j < sys.m; ++j) gi += out.gain(i, j) * e[j];
		if (!std::isfinite(gi)) {
			throw NumericalError("non-finite residual at t=" + std::to_string(t));
		}
		g[i] = gi;
	}
	return g;
}

LossBreakdown loss(const NetworkParams &params, const TrainingDataset &ds,
                   const SystemModel &sys, const LossWeights &weights,
                   const CollocationSpec &colloc, Mse0Mode mode)
{
	weights.validate();
	LossKernel kernel(params.spec(), sys, make_loss_problem(ds, sys, colloc, mode), weights);
	return kernel.evaluate(params.flat(), {});
}

LossBreakdown loss_and_gradient_reference(const NetworkParams &params,
                                          const SystemModel &sys, const LossProblem &prob,
                                          const LossWeights &weights,
                                          std::vector<double> &grad_out)
{
	Tape tape;
	const std::vector<Var> vars = record_params(tape, params.flat());
	const auto terms =
	    loss_terms_generic<Var>(params.spec(), std::span<const Var>(vars), sys, prob);
	const Var total =
	    weights.w0 * terms.mse0 + weights.w_ode * terms.mseg + weights.w_y * terms.msey;
	grad_out = grad(total, vars);
	return LossBreakdown::combine(terms.mse0.value(), terms.mseg.value(),
	                              terms.msey.value(), weights);
}

LossBreakdown loss_reference(const NetworkParams &params, const SystemModel &sys,
                             const LossProblem &prob, const LossWeights &weights)
{
	const auto terms = loss_terms_generic<double>(params.spec(), params.flat(), sys, prob);
	return LossBreakdown::combine(terms.mse0, terms.mseg, terms.msey, weights);
}

}  // namespace pinnobs
