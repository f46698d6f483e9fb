#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pinnobs/integrator.hpp"
#include "pinnobs/network.hpp"
#include "pinnobs/systems.hpp"

namespace pinnobs {

struct LossWeights {
	double w0 = 1.0;
	double w_ode = 1.0;
	double w_y = 1.0;

	void validate() const;
};

struct LossBreakdown {
	double total = 0.0;
	double mse0 = 0.0;
	double mseg = 0.0;
	double msey = 0.0;

	/// total = w0 * mse0 + w_ode * mseg + w_y * msey
	static LossBreakdown combine(double mse0, double mseg, double msey,
	                             const LossWeights &w);
};

/// How the initial-state mismatch is penalised: ||xhat(t0) - xa||^2 or ||.||.
enum class Mse0Mode { squared, norm };

/// Where the ODE residual is evaluated.
struct CollocationSpec {
	enum class Kind { train, uniform } kind = Kind::train;
	/// Number of uniform collocation points when kind == uniform.
	std::size_t count = 0;
};

/**
 * Everything the loss reads: evaluation times, the measurement at each time,
 * per-point weights of the output and residual terms, and the anchor point for
 * the initial-state term. Built from a TrainingDataset's training split only.
 */
struct LossProblem {
	std::size_t n_x = 0;
	std::size_t m = 0;
	std::vector<double> times;
	std::vector<double> y;                ///< times.size() x m
	std::vector<double> data_weight;      ///< 1/N_data at data points, else 0
	std::vector<double> residual_weight;  ///< 1/N_colloc at collocation points, else 0
	std::size_t anchor = 0;               ///< index of t0 in `times`
	std::vector<double> xhat0;
	Mse0Mode mse0_mode = Mse0Mode::squared;

	std::size_t size() const { return times.size(); }
};

LossProblem make_loss_problem(const TrainingDataset &ds, const SystemModel &sys,
                              const CollocationSpec &colloc = {},
                              Mse0Mode mode = Mse0Mode::squared);

/**
 * Observer residual at t:
 *   g = dxhat/dt - f(xhat, t) - B u(t) - L(t) (y - C xhat).
 * Uses only the measurement y.
 */
std::vector<double> residual(const NetworkParams &params, const SystemModel &sys, double t,
                             std::span<const double> y);

/// Composite loss evaluated with the batched kernel (no gradient).
LossBreakdown loss(const NetworkParams &params, const TrainingDataset &ds,
                   const SystemModel &sys, const LossWeights &weights,
                   const CollocationSpec &colloc = {}, Mse0Mode mode = Mse0Mode::squared);

/// Unweighted loss terms for any scalar type.
template <typename T>
struct LossTerms {
	T mse0, mseg, msey;
};

namespace detail {

template <typename T>
T constant_like(const T &, double v)
{
	return v;
}

inline Var constant_like(const Var &ref, double v) { return ref.tape()->variable(v); }

template <typename T>
std::vector<T> drift_of(const SystemModel &sys, const std::vector<T> &x, double t)
{
	if constexpr (std::is_same_v<T, double>) {
		std::vector<double> out(sys.n_x);
		sys.drift(x, t, out);
		return out;
	} else {
		return sys.drift_tape(x, t);
	}
}

}  // namespace detail

/**
 * Scalar reference implementation of the loss terms, generic over `double`
 * and tape `Var`. One point at a time, serial. Used as the oracle for the
 * batched kernel and for finite-difference checks.
 */
template <typename T>
LossTerms<T> loss_terms_generic(const LayerSpec &spec, std::span<const T> params,
                                const SystemModel &sys, const LossProblem &prob)
{
	using detail::constant_like;
	const std::size_t nx = sys.n_x, m = sys.m;
	check_heads(spec, nx, m);
	const T &ref = params[0];
	T mse0 = constant_like(ref, 0.0), mseg = constant_like(ref, 0.0),
	  msey = constant_like(ref, 0.0);
	std::vector<double> bu(nx);

	for (std::size_t p = 0; p < prob.size(); ++p) {
		const double t = prob.times[p];
		const bool is_anchor = p == prob.anchor;
		const double dw = prob.data_weight[p], rw = prob.residual_weight[p];
		if (!is_anchor && dw == 0.0 && rw == 0.0) continue;

		const auto out = evaluate_generic<T, Dual<T>>(
		    spec, params, Dual<T>::seed(constant_like(ref, t)));
		std::vector<T> xhat;
		for (std::size_t i = 0; i < nx; ++i) xhat.push_back(out[i].value);

		std::vector<T> e;
		for (std::size_t j = 0; j < m; ++j) {
			T cx = constant_like(ref, 0.0);
			for (std::size_t k = 0; k < nx; ++k) {
				if (sys.C[j * nx + k] != 0.0) cx = cx + sys.C[j * nx + k] * xhat[k];
			}
			e.push_back(cx - prob.y[p * m + j]);
		}
		if (dw != 0.0) {
			for (const T &ej : e) msey = msey + dw * (ej * ej);
		}
		if (rw != 0.0) {
			const std::vector<T> f = detail::drift_of(sys, xhat, t);
			forcing(sys, t, bu);
			for (std::size_t i = 0; i < nx; ++i) {
				T g = out[i].deriv - f[i] - bu[i];
				for (std::size_t j = 0; j < m; ++j) {
					g = g + out[nx + i * m + j].value * e[j];
				}
				mseg = mseg + rw * (g * g);
			}
		}
		if (is_anchor) {
			T d2 = constant_like(ref, 0.0);
			for (std::size_t i = 0; i < nx; ++i) {
				const T d = xhat[i] - prob.xhat0[i];
				d2 = d2 + d * d;
			}
			if (prob.mse0_mode == Mse0Mode::squared) {
				mse0 = d2;
			} else {
				using std::sqrt;
				mse0 = sqrt(d2);
			}
		}
	}
	return {mse0, mseg, msey};
}

/// Loss and gradient through the gradient tape (serial reference).
LossBreakdown loss_and_gradient_reference(const NetworkParams &params,
                                          const SystemModel &sys, const LossProblem &prob,
                                          const LossWeights &weights,
                                          std::vector<double> &grad_out);

/// Loss (double evaluation of the reference path).
LossBreakdown loss_reference(const NetworkParams &params, const SystemModel &sys,
                             const LossProblem &prob, const LossWeights &weights);

}  // namespace pinnobs
