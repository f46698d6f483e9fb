#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pinnobs/experiment.hpp"

using namespace pinnobs;

namespace {

struct Common {
	std::string config;
	std::optional<std::uint64_t> seed;
	std::optional<std::size_t> max_iters;
	std::optional<std::string> out;
	std::optional<std::size_t> threads;
	std::vector<std::string> set;
};

void add_common(CLI::App *app, Common &c)
{
	app->add_option("config", c.config, "experiment config file")->required();
	app->add_option("--seed", c.seed, "initialisation and split seed");
	app->add_option("--max-iters", c.max_iters, "iteration cap");
	app->add_option("--out", c.out, "output directory");
	app->add_option("--threads", c.threads, "OpenMP threads for the loss kernel");
	app->add_option("--set", c.set, "override, section.key=value")->take_all();
}

KeyValueFile overrides(const Common &c)
{
	KeyValueFile kv;
	for (const auto &s : c.set) {
		const auto eq = s.find('=');
		if (eq == std::string::npos || eq == 0) {
			throw ConfigError(s, "expected section.key=value");
		}
		kv.set(s.substr(0, eq), s.substr(eq + 1));
	}
	if (c.seed) kv.set("training.seed", std::to_string(*c.seed));
	if (c.max_iters) kv.set("training.max_iters", std::to_string(*c.max_iters));
	if (c.out) kv.set("output.dir", *c.out);
	if (c.threads) kv.set("training.threads", std::to_string(*c.threads));
	return kv;
}

ExperimentConfig resolve(const Common &c)
{
	ExperimentConfig cfg = ExperimentConfig::load(c.config);
	apply_overrides(cfg, overrides(c));
	cfg.validate();
	return cfg;
}

void summary(const ExperimentResult &r)
{
	if (r.replay_blowup_time) {
		std::cout << "replay left the finite range at t=" << format_double(*r.replay_blowup_time)
		          << "; metrics cover the finite prefix\n";
	}
	std::cout << "replay rmse " << format_double(r.replay.rmse()) << "  test rmse "
	          << format_double(r.test.rmse()) << "  inference " << format_double(r.inference_ms)
	          << " ms\n";
}

}  // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Adaptive physics-informed neural network observer"};
	app.require_subcommand(1);

	Common run_opts, abl_opts, rep_opts;
	auto *run = app.add_subcommand("run", "train an observer and evaluate it");
	add_common(run, run_opts);

	auto *ablate = app.add_subcommand("ablate", "run an ablation grid");
	add_common(ablate, abl_opts);
	std::size_t jobs = 1;
	ablate->add_option("--jobs", jobs, "cells trained concurrently")->check(CLI::PositiveNumber);

	auto *replay = app.add_subcommand("replay", "replay a saved observer against fresh ground truth");
	add_common(replay, rep_opts);
	std::string ckpt;
	replay->add_option("--ckpt,--checkpoint", ckpt,
	                   "params.ckpt from a previous run (default: output.checkpoint)");

	auto *met = app.add_subcommand("metrics", "error metrics between two trajectory CSVs");
	std::string truth_csv, est_csv, metrics_out;
	met->add_option("truth", truth_csv)->required();
	met->add_option("estimate", est_csv)->required();
	met->add_option("--out", metrics_out, "write key = value metrics here");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		return app.exit(e) == 0 ? exit_ok : exit_usage;
	}

	try {
		if (*run) {
			const ExperimentConfig cfg = resolve(run_opts);
			const ExperimentResult r = run_experiment(cfg);
			std::cout << "best loss " << format_double(r.training.best_loss.total) << " at iteration "
			          << r.training.best_iteration << " of " << r.training.iterations << '\n';
			summary(r);
			std::cout << "artifacts in " << cfg.output_dir.string() << '\n';
		} else if (*ablate) {
			const AblationGrid grid = load_ablation(abl_opts.config, overrides(abl_opts));
			const auto rows = run_ablation(grid, jobs);
			for (const auto &row : rows) {
				std::cout << row.id << "  " << row.status << "  rmse " << format_double(row.rmse)
				          << '\n';
			}
			std::cout << "table in " << (grid.output_dir / "ablation.csv").string() << '\n';
		} else if (*replay) {
			const ExperimentConfig cfg = resolve(rep_opts);
			if (ckpt.empty()) {
				if (!cfg.checkpoint) {
					throw ConfigError("output.checkpoint", "replay needs --ckpt or a checkpoint path");
				}
				ckpt = cfg.checkpoint->string();
			}
			summary(run_replay(cfg, ckpt));
		} else if (*met) {
			const auto r = metrics(read_trajectory_csv(truth_csv), read_trajectory_csv(est_csv));
			const KeyValues kv = metrics_key_values(r);
			for (const auto &[k, v] : kv) std::cout << k << " = " << v << '\n';
			if (!metrics_out.empty()) write_key_values(kv, metrics_out);
		}
	} catch (...) {
		return report_failure(std::cerr);
	}
	return exit_ok;
}
