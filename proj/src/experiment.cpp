#include "pinnobs/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace pinnobs {

namespace {

void ensure_dir(const std::filesystem::path &dir)
{
	std::error_code ec;
	std::filesystem::create_directories(dir, ec);
	if (ec) {
		throw IoError("cannot create " + dir.string() + ": " + ec.message());
	}
}

void write_text(const std::string &text, const std::filesystem::path &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) throw IoError("cannot open " + path.string() + " for writing");
	os << text;
	if (!os) throw IoError("write failed: " + path.string());
}

void evaluate_and_write(const ExperimentConfig &cfg, const SystemModel &sys,
                        const NetworkParams &params, const TrainingDataset &ds,
                        ExperimentResult &r, KeyValues extra)
{
	std::string status = "ok";
	try {
		r.estimate = replay_observer(sys, params, sys.xhat0,
		                             MeasurementSeries::from_trajectory(r.truth, sys),
		                             sys.horizon, sys.dt);
	} catch (const TrajectoryBlowUp &e) {
		r.estimate = e.partial();
		r.replay_blowup_time = e.time();
		status = "blow-up";
	}
	const std::vector<std::size_t> prefix = [&] {
		std::vector<std::size_t> rows(r.estimate.size());
		for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
		return rows;
	}();
	const Trajectory truth = select_rows(r.truth, prefix);
	r.replay = metrics(truth, r.estimate);
	const auto hidden = unmeasured_states(sys);
	r.replay_unmeasured = metrics_over(truth, r.estimate, hidden);

	const Trajectory pred = predict_states(params, sys, r.truth.times);
	const Trajectory test_truth = select_rows(r.truth, ds.test);
	const Trajectory test_pred = select_rows(pred, ds.test);
	r.test = metrics(test_truth, test_pred);
	r.test_unmeasured = metrics_over(test_truth, test_pred, hidden);
	r.inference_ms = inference_time_ms(params, sys);

	const auto &dir = cfg.output_dir;
	write_trajectory_csv(r.truth, dir / "truth.csv");
	write_trajectory_csv(r.estimate, dir / "estimate.csv");
	write_error_csv(r.replay.per_time_error, dir / "errors.csv");

	KeyValues kv = {{"replay_status", status},
	                {"replay_end_time", format_double(r.estimate.times.back())}};
	for (auto &e : metrics_key_values(r.replay)) kv.push_back(std::move(e));
	kv.emplace_back("unmeasured_mae", format_double(r.replay_unmeasured.mae));
	kv.emplace_back("unmeasured_mse", format_double(r.replay_unmeasured.mse));
	kv.emplace_back("unmeasured_rmse", format_double(r.replay_unmeasured.rmse));
	kv.emplace_back("unmeasured_smape_percent", format_double(r.replay_unmeasured.smape_percent));
	for (auto &e : metrics_key_values(r.test, "test_")) kv.push_back(std::move(e));
	kv.emplace_back("test_unmeasured_mae", format_double(r.test_unmeasured.mae));
	kv.emplace_back("test_unmeasured_mse", format_double(r.test_unmeasured.mse));
	kv.emplace_back("test_unmeasured_rmse", format_double(r.test_unmeasured.rmse));
	kv.emplace_back("test_unmeasured_smape_percent", format_double(r.test_unmeasured.smape_percent));
	kv.emplace_back("inference_ms", format_double(r.inference_ms));
	for (auto &e : extra) kv.push_back(std::move(e));
	write_key_values(kv, dir / "metrics.txt");
}

}  // namespace

void write_history_csv(const std::vector<LossBreakdown> &history, std::size_t interval,
                       const std::filesystem::path &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) throw IoError("cannot open " + path.string() + " for writing");
	os << "iter,total,mse0,mseg,msey\n";
	char buf[160];
	for (std::size_t i = 0; i < history.size(); ++i) {
		if (i % interval != 0 && i + 1 != history.size()) continue;
		const auto &h = history[i];
		std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, h.total, h.mse0,
		              h.mseg, h.msey);
		os << buf;
	}
	if (!os) throw IoError("write failed: " + path.string());
}

void write_error_csv(const Trajectory &errors, const std::filesystem::path &path)
{
	write_trajectory_csv(errors, path, "e");
}

ExperimentResult run_experiment(const ExperimentConfig &cfg)
{
	cfg.validate();
	const SystemModel sys = cfg.make_system_model();
	const TrainConfig tc = cfg.train_config(sys);
	ensure_dir(cfg.output_dir);
	write_text(cfg.to_text(sys), cfg.output_dir / "manifest.txt");

	ExperimentResult r;
	r.truth = simulate(sys, sys.x0, sys.horizon, sys.dt);
	const TrainingDataset ds = build_dataset(r.truth, sys, cfg.effective_split_seed());

	const auto t0 = std::chrono::steady_clock::now();
	r.training = train(tc, ds, sys);
	r.train_seconds =
	    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

	save_checkpoint(r.training.best, cfg.output_dir / "params.ckpt");
	write_history_csv(r.training.history, cfg.log_interval, cfg.output_dir / "history.csv");

	const auto &b = r.training.best_loss;
	KeyValues extra = {
	    {"best_loss", format_double(b.total)},
	    {"best_mse0", format_double(b.mse0)},
	    {"best_mseg", format_double(b.mseg)},
	    {"best_msey", format_double(b.msey)},
	    {"best_iteration", std::to_string(r.training.best_iteration)},
	    {"iterations", std::to_string(r.training.iterations)},
	    {"early_stopped", r.training.early_stopped ? "1" : "0"},
	    {"train_time_s", format_double(r.train_seconds)},
	};
	evaluate_and_write(cfg, sys, r.training.best, ds, r, std::move(extra));
	return r;
}

ExperimentResult run_replay(const ExperimentConfig &cfg, const std::filesystem::path &ckpt)
{
	cfg.validate();
	const SystemModel sys = cfg.make_system_model();
	const NetworkParams params = load_checkpoint(ckpt);
	try {
		check_heads(params.spec(), sys.n_x, sys.m);
	} catch (const ContractError &e) {
		throw ConfigError("checkpoint", e.what());
	}
	ensure_dir(cfg.output_dir);
	write_text(cfg.to_text(sys), cfg.output_dir / "manifest.txt");

	ExperimentResult r;
	r.training.best = params;
	r.truth = simulate(sys, sys.x0, sys.horizon, sys.dt);
	const TrainingDataset ds = build_dataset(r.truth, sys, cfg.effective_split_seed());
	evaluate_and_write(cfg, sys, params, ds, r, {{"checkpoint", ckpt.string()}});
	return r;
}

const std::vector<LossWeights> &weight_cases()
{
	static const std::vector<LossWeights> cases = {
	    {1.0, 1.0, 1.0}, {0.5, 1.5, 1.0}, {1.5, 0.5, 1.0}, {1.0, 2.0, 1.0},
	    {2.0, 1.0, 1.0}, {2.0, 1.0, 0.5}, {2.0, 1.5, 1.5},
	};
	return cases;
}

namespace {

std::vector<std::string> split_list(const std::string &v, char sep)
{
	std::vector<std::string> out;
	std::string item;
	std::istringstream is(v);
	while (std::getline(is, item, sep)) {
		const auto b = item.find_first_not_of(" \t");
		const auto e = item.find_last_not_of(" \t");
		if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
	}
	return out;
}

std::size_t parse_count(const std::string &key, const std::string &v)
{
	if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
		throw ConfigError(key, "expected a positive integer, got '" + v + "'");
	}
	return std::stoul(v);
}

}  // namespace

AblationGrid load_ablation(const std::filesystem::path &path, const KeyValueFile &cli_overrides)
{
	const KeyValueFile grid = KeyValueFile::load(path);
	const std::filesystem::path base_path = path.parent_path() / grid.get("ablation.base");

	ExperimentConfig base;
	apply_overrides(base, KeyValueFile::load(base_path));
	KeyValueFile rest;
	for (const auto &[k, v] : grid.values()) {
		if (!k.starts_with("ablation.")) rest.set(k, v);
	}
	apply_overrides(base, rest);
	apply_overrides(base, cli_overrides);
	base.validate();

	AblationGrid g;
	g.output_dir = base.output_dir;
	const std::string axis = grid.get("ablation.axis");
	auto add = [&](std::string id, ExperimentConfig c) {
		c.output_dir = g.output_dir / id;
		c.validate();
		g.cells.push_back({std::move(id), std::move(c)});
	};

	if (axis == "architecture") {
		for (const auto &l : split_list(grid.get("ablation.layers"), ',')) {
			for (const auto &n : split_list(grid.get("ablation.neurons"), ',')) {
				ExperimentConfig c = base;
				c.hidden_layers = parse_count("ablation.layers", l);
				c.neurons = parse_count("ablation.neurons", n);
				add("L" + l + "_N" + n, std::move(c));
			}
		}
	} else if (axis == "activation") {
		for (const auto &a : split_list(grid.get("ablation.activations"), ',')) {
			ExperimentConfig c = base;
			try {
				c.activation = parse_activation(a);
			} catch (const ContractError &) {
				throw ConfigError("ablation.activations", "unknown activation '" + a + "'");
			}
			add("act_" + std::string(to_string(c.activation)), std::move(c));
		}
	} else if (axis == "weights") {
		const std::string spec = grid.has("ablation.weight_cases") ? grid.get("ablation.weight_cases")
		                                                           : "1,2,3,4,5,6,7";
		for (const auto &s : split_list(spec, ',')) {
			const std::size_t k = parse_count("ablation.weight_cases", s);
			if (k < 1 || k > weight_cases().size()) {
				throw ConfigError("ablation.weight_cases", "case " + s + " out of range 1..7");
			}
			ExperimentConfig c = base;
			c.weights = weight_cases()[k - 1];
			add("case" + s, std::move(c));
		}
	} else {
		throw ConfigError("ablation.axis", "expected architecture, activation or weights");
	}
	return g;
}

std::vector<AblationRow> run_ablation(const AblationGrid &grid, std::size_t jobs)
{
	std::error_code ec;
	std::filesystem::create_directories(grid.output_dir, ec);
	if (ec) throw IoError("cannot create " + grid.output_dir.string());

	std::vector<AblationRow> rows(grid.cells.size());
	std::atomic<std::size_t> next{0};
	const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, grid.cells.size()));

	auto worker = [&] {
		for (std::size_t i; (i = next++) < grid.cells.size();) {
			const AblationCell &cell = grid.cells[i];
			AblationRow &row = rows[i];
			row.id = cell.id;
			ExperimentConfig cfg = cell.config;
			if (workers > 1) cfg.threads = 1;
			try {
				const ExperimentResult r = run_experiment(cfg);
				row.status = "ok";
				row.rmse = r.test.rmse();
				row.mae = r.test.mae();
				row.replay_rmse = r.replay.rmse();
				row.inference_ms = r.inference_ms;
				row.train_seconds = r.train_seconds;
				row.best_iteration = r.training.best_iteration;
				row.iterations = r.training.iterations;
				row.best_loss = r.training.best_loss.total;
			} catch (const TrainingDiverged &e) {
				row.status = "diverged";
				row.iterations = e.iteration();
			} catch (const std::exception &e) {
				row.status = std::string("error: ") + e.what();
			}
		}
	};
	std::vector<std::thread> pool;
	for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
	worker();
	for (auto &t : pool) t.join();

	const auto path = grid.output_dir / "ablation.csv";
	std::ofstream os(path, std::ios::binary);
	if (!os) throw IoError("cannot open " + path.string() + " for writing");
	os << "cell,status,rmse,mae,inference_ms,train_s,conv_iter,best_loss,iterations,replay_rmse\n";
	for (const auto &r : rows) {
		std::string status = r.status;
		for (char &ch : status) {
			if (ch == ',' || ch == '\n') ch = ' ';
		}
		os << r.id << ',' << status << ',' << format_double(r.rmse) << ',' << format_double(r.mae)
		   << ',' << format_double(r.inference_ms) << ',' << format_double(r.train_seconds) << ','
		   << r.best_iteration << ',' << format_double(r.best_loss) << ',' << r.iterations << ','
		   << format_double(r.replay_rmse) << '\n';
	}
	if (!os) throw IoError("write failed: " + path.string());
	return rows;
}

int report_failure(std::ostream &err)
{
	try {
		throw;
	} catch (const ConfigError &e) {
		err << "invalid config: " << e.what() << '\n';
		return exit_invalid_config;
	} catch (const TrainingDiverged &e) {
		err << "training " << e.what() << '\n';
		return exit_diverged;
	} catch (const NumericalError &e) {
		err << "numerical failure: " << e.what() << '\n';
		return exit_diverged;
	} catch (const IoError &e) {
		err << "i/o error: " << e.what() << '\n';
		return exit_io;
	} catch (const std::filesystem::filesystem_error &e) {
		err << "i/o error: " << e.what() << '\n';
		return exit_io;
	} catch (const ContractError &e) {
		err << "invalid config: " << e.what() << '\n';
		return exit_invalid_config;
	} catch (const std::exception &e) {
		err << "error: " << e.what() << '\n';
		return exit_usage;
	}
}

}  // namespace pinnobs
