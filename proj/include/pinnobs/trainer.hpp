#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pinnobs/adam.hpp"
#include "pinnobs/loss.hpp"
#include "pinnobs/network.hpp"

namespace pinnobs {

struct TrainConfig {
	LayerSpec spec;
	double lr = 1e-3;
	std::size_t max_iters = 200'000;
	std::size_t patience = 20'000;
	LossWeights weights;
	std::uint64_t seed = 42;
	CollocationSpec collocation;
	Mse0Mode mse0_mode = Mse0Mode::squared;
	/// Relative decrease that counts as an improvement for early stopping.
	double improvement_tol = 1e-12;
	/// OpenMP threads for the loss kernel; 0 = default.
	int threads = 0;

	void validate() const;
};

struct TrainResult {
	NetworkParams best;
	/// Loss at every iteration, evaluated before that iteration's update.
	std::vector<LossBreakdown> history;
	LossBreakdown best_loss;
	/// First iteration at which the best loss was reached.
	std::size_t best_iteration = 0;
	/// Iterations performed (early stop or max_iters).
	std::size_t iterations = 0;
	bool early_stopped = false;
};

/// Called after each iteration with (iteration, loss); return false to stop.
using TrainCallback = std::function<bool(std::size_t, const LossBreakdown &)>;

/**
 * Full-batch Adam on the composite observer loss with early stopping.
 * Starts from init_params(config.spec, config.seed) and returns the best
 * snapshot. Throws TrainingDiverged if the loss or gradient becomes
 * non-finite.
 */
TrainResult train(const TrainConfig &config, const TrainingDataset &ds, const SystemModel &sys,
                  const TrainCallback &callback = {});

/// Same, starting from given parameters.
TrainResult train_from(NetworkParams start, const TrainConfig &config,
                       const TrainingDataset &ds, const SystemModel &sys,
                       const TrainCallback &callback = {});

}  // namespace pinnobs
