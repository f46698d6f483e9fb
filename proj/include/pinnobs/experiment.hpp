#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pinnobs/config.hpp"
#include "pinnobs/evaluator.hpp"
#include "pinnobs/trainer.hpp"

namespace pinnobs {

enum ExitCode : int {
	exit_ok = 0,
	exit_usage = 1,
	exit_invalid_config = 2,
	exit_diverged = 3,
	exit_io = 4,
};

struct ExperimentResult {
	TrainResult training;
	Trajectory truth;
	/// Observer replay. If it blew up, holds the finite prefix and replay
	/// metrics cover only that prefix.
	Trajectory estimate;
	std::optional<double> replay_blowup_time;
	MetricsReport replay;
	/// Direct network prediction on the held-out 40% of samples.
	MetricsReport test;
	ErrorMetrics replay_unmeasured;
	ErrorMetrics test_unmeasured;
	double train_seconds = 0.0;
	double inference_ms = 0.0;
};

/**
 * Ground truth -> dataset -> training -> observer replay, writing truth.csv,
 * estimate.csv, errors.csv, history.csv, metrics.txt, params.ckpt and
 * manifest.txt into cfg.output_dir. Throws the library exceptions unchanged.
 */
ExperimentResult run_experiment(const ExperimentConfig &cfg);

/// Replay only, from a saved checkpoint; writes truth/estimate/errors/metrics.
ExperimentResult run_replay(const ExperimentConfig &cfg, const std::filesystem::path &ckpt);

/// `iter,total,mse0,mseg,msey` every `interval` iterations plus the last one.
void write_history_csv(const std::vector<LossBreakdown> &history, std::size_t interval,
                       const std::filesystem::path &path);

/// `t,e1,...,en`.
void write_error_csv(const Trajectory &errors, const std::filesystem::path &path);

struct AblationCell {
	std::string id;
	ExperimentConfig config;
};

struct AblationGrid {
	std::vector<AblationCell> cells;
	std::filesystem::path output_dir;
};

/// Loss-weight cases (w0, w_ode, w_y) of the sensitivity study, cases 1..7.
const std::vector<LossWeights> &weight_cases();

/**
 * Grid file: an [ablation] section with `base` (experiment config, relative
 * to the grid file), `axis` (architecture | activation | weights) and the
 * axis values; any other section overrides keys of the base config.
 */
AblationGrid load_ablation(const std::filesystem::path &path,
                           const KeyValueFile &cli_overrides = {});

struct AblationRow {
	std::string id;
	std::string status;
	double rmse = NAN, mae = NAN, inference_ms = NAN, train_seconds = NAN;
	double replay_rmse = NAN, best_loss = NAN;
	std::size_t best_iteration = 0, iterations = 0;
};

/// Runs every cell (up to `jobs` concurrently) and writes ablation.csv.
std::vector<AblationRow> run_ablation(const AblationGrid &grid, std::size_t jobs);

/// Maps an in-flight exception to the CLI exit code and prints a diagnostic.
int report_failure(std::ostream &err);

}  // namespace pinnobs
