#include "pinnobs/trainer.hpp"

#include <cmath>

#include "pinnobs/loss_kernel.hpp"

namespace pinnobs {

void TrainConfig::validate() const
{
	spec.validate();
	weights.validate();
	if (!(lr > 0.0) || !std::isfinite(lr)) {
		throw ContractError("lr must be positive");
	}
	if (patience > max_iters) {
		throw ContractError("patience must not exceed max_iters");
	}
	if (!(improvement_tol >= 0.0)) {
		throw ContractError("improvement tolerance must be non-negative");
	}
}

TrainResult train(const TrainConfig &config, const TrainingDataset &ds, const SystemModel &sys,
                  const TrainCallback &callback)
{
	return train_from(init_params(config.spec, config.seed), config, ds, sys, callback);
}

TrainResult train_from(NetworkParams start, const TrainConfig &config,
                       const TrainingDataset &ds, const SystemModel &sys,
                       const TrainCallback &callback)
{
	config.validate();
	if (!(start.spec() == config.spec)) {
		throw ContractError("train: starting parameters do not match the layer spec");
	}
	LossKernel kernel(config.spec, sys,
	                  make_loss_problem(ds, sys, config.collocation, config.mse0_mode),
	                  config.weights);
	kernel.set_threads(config.threads);

	TrainResult r;
	NetworkParams params = std::move(start);
	r.best = params;
	r.history.reserve(config.max_iters);
	AdamState adam(params.size());
	std::vector<double> grads(params.size());

	double best = INFINITY;
	std::size_t stale = 0;
	for (std::size_t it = 0; it < config.max_iters; ++it) {
		LossBreakdown lb;
		try {
			lb = kernel.evaluate(params.flat(), grads);
		} catch (const NumericalError &e) {
			throw TrainingDiverged(it, e.what());
		}
		r.history.push_back(lb);
		r.iterations = it + 1;

		if (lb.total < best * (1.0 - config.improvement_tol) || it == 0) {
			best = lb.total;
			r.best = params;
			r.best_loss = lb;
			r.best_iteration = it;
			stale = 0;
		} else if (++stale > config.patience) {
			r.early_stopped = true;
			break;
		}
		if (callback && !callback(it, lb)) {
			break;
		}
		try {
			adam_step(params.flat(), grads, adam, config.lr);
		} catch (const NumericalError &e) {
			throw TrainingDiverged(it, e.what());
		}
	}
	return r;
}

}  // namespace pinnobs
