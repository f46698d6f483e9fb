#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pinnobs/experiment.hpp"

using namespace pinnobs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name)
{
	const auto dir = fs::temp_directory_path() / "pinnobs_experiment" / name;
	fs::remove_all(dir);
	fs::create_directories(dir);
	return dir;
}

std::string slurp(const fs::path &p)
{
	std::ifstream is(p, std::ios::binary);
	std::ostringstream ss;
	ss << is.rdbuf();
	return ss.str();
}

ExperimentConfig quick(const fs::path &out, const std::string &system = "reverse_duffing")
{
	ExperimentConfig c;
	c.system = system;
	c.horizon = 1.0;
	c.hidden_layers = 2;
	c.neurons = 6;
	c.max_iters = 30;
	c.patience = 30;
	c.log_interval = 10;
	c.output_dir = out;
	return c;
}

void write(const fs::path &p, const std::string &text)
{
	std::ofstream os(p);
	os << text;
}

}  // namespace

TEST(Experiment, WritesArtifactSet)
{
	const auto out = scratch("artifacts");
	const auto r = run_experiment(quick(out));
	for (const char *f : {"truth.csv", "estimate.csv", "errors.csv", "history.csv", "metrics.txt",
	                      "params.ckpt", "manifest.txt"}) {
		EXPECT_TRUE(fs::exists(out / f)) << f;
	}
	const auto truth = read_trajectory_csv(out / "truth.csv");
	const auto est = read_trajectory_csv(out / "estimate.csv");
	EXPECT_EQ(truth.times, est.times);
	EXPECT_EQ(truth.size(), 501u);

	std::istringstream hist(slurp(out / "history.csv"));
	std::string line;
	std::getline(hist, line);
	EXPECT_EQ(line, "iter,total,mse0,mseg,msey");
	std::vector<std::string> iters;
	while (std::getline(hist, line)) iters.push_back(line.substr(0, line.find(',')));
	EXPECT_EQ(iters, (std::vector<std::string>{"0", "10", "20", "29"}));

	std::string err_header;
	std::istringstream errs(slurp(out / "errors.csv"));
	std::getline(errs, err_header);
	EXPECT_EQ(err_header, "t,e1,e2");

	const auto kv = read_key_values(out / "metrics.txt");
	std::map<std::string, std::string> m(kv.begin(), kv.end());
	for (const char *k : {"mae", "mse", "rmse", "smape_percent", "mae_x2", "unmeasured_rmse",
	                      "test_rmse", "inference_ms", "best_loss", "best_iteration", "iterations",
	                      "train_time_s"}) {
		ASSERT_TRUE(m.contains(k)) << k;
		EXPECT_TRUE(std::isfinite(std::stod(m[k]))) << k;
	}
	EXPECT_EQ(std::stod(m["rmse"]), r.replay.rmse());
	EXPECT_EQ(m["iterations"], "30");
	EXPECT_EQ(m["replay_status"], "ok");
}

TEST(Experiment, RerunIsByteIdentical)
{
	const auto a = scratch("rerun_a"), b = scratch("rerun_b");
	run_experiment(quick(a));
	run_experiment(quick(b));
	for (const char *f : {"truth.csv", "estimate.csv", "errors.csv", "history.csv", "params.ckpt"}) {
		EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
	}
}

TEST(Experiment, ManifestEchoesResolvedConfig)
{
	const auto out = scratch("manifest");
	run_experiment(quick(out, "harmonic_oscillator"));
	const auto text = slurp(out / "manifest.txt");
	const auto back = ExperimentConfig::from_file(KeyValueFile::parse(text));
	EXPECT_EQ(back.system, "harmonic_oscillator");
	EXPECT_EQ(back.max_iters, 30u);
	EXPECT_NE(text.find("xhat0 = 0, 1, -1"), std::string::npos);
	EXPECT_NE(text.find("w_ode = 1"), std::string::npos);
}

TEST(Experiment, ReplayFromCheckpointReproducesEstimate)
{
	const auto out = scratch("replay_src"), again = scratch("replay_dst");
	run_experiment(quick(out));
	auto cfg = quick(again);
	run_replay(cfg, out / "params.ckpt");
	EXPECT_EQ(slurp(out / "estimate.csv"), slurp(again / "estimate.csv"));
	EXPECT_FALSE(fs::exists(again / "history.csv"));
}

TEST(Experiment, ReplayBlowUpKeepsArtifacts)
{
	const auto out = scratch("replay_blowup");
	const auto spec = LayerSpec::observer(2, 1, 2, 6);
	auto p = init_params(spec, 1);
	// Gain L1 = 1e4 makes the observer too stiff for RK4 at dt = 2e-3.
	p.flat()[p.size() - spec.output_width() + 2] = 1e4;
	save_checkpoint(p, out / "stiff.ckpt");
	const auto r = run_replay(quick(out), out / "stiff.ckpt");
	ASSERT_TRUE(r.replay_blowup_time.has_value());
	EXPECT_LT(r.estimate.size(), r.truth.size());
	EXPECT_GT(r.estimate.size(), 1u);

	const auto est = read_trajectory_csv(out / "estimate.csv");
	const auto errs = read_trajectory_csv(out / "errors.csv");
	EXPECT_EQ(est.times, errs.times);
	EXPECT_EQ(est.size(), r.estimate.size());
	EXPECT_EQ(read_trajectory_csv(out / "truth.csv").size(), r.truth.size());

	const auto kv = read_key_values(out / "metrics.txt");
	std::map<std::string, std::string> m(kv.begin(), kv.end());
	EXPECT_EQ(m["replay_status"], "blow-up");
	EXPECT_EQ(std::stod(m["replay_end_time"]), r.estimate.times.back());
	EXPECT_TRUE(std::isfinite(std::stod(m["rmse"])));
}

TEST(Experiment, ReplayRejectsMismatchedCheckpoint)
{
	const auto out = scratch("replay_mismatch");
	run_experiment(quick(out));
	EXPECT_THROW(run_replay(quick(scratch("replay_mismatch_dst"), "rigid_body"), out / "params.ckpt"),
	             ConfigError);
}

TEST(Experiment, DivergenceSurfaces)
{
	auto cfg = quick(scratch("diverge"));
	cfg.lr = 1e300;
	EXPECT_THROW(run_experiment(cfg), TrainingDiverged);
}

TEST(Ablation, GridShapes)
{
	const auto dir = scratch("grids");
	write(dir / "base.cfg", "[system]\nname = reverse_duffing\n[training]\nmax_iters = 5\npatience = 5\n");
	write(dir / "arch.cfg",
	      "[ablation]\nbase = base.cfg\naxis = architecture\nlayers = 4, 9, 12, 15\n"
	      "neurons = 10, 15, 20, 30\n[output]\ndir = " + (dir / "out").string() + "\n");
	write(dir / "act.cfg", "[ablation]\nbase = base.cfg\naxis = activation\n"
	                       "activations = relu, sigmoid, tanh, sine\n");
	write(dir / "w.cfg", "[ablation]\nbase = base.cfg\naxis = weights\nweight_cases = 1,2,3,4,5,6,7\n");

	const auto arch = load_ablation(dir / "arch.cfg");
	ASSERT_EQ(arch.cells.size(), 16u);
	EXPECT_EQ(arch.cells[5].id, "L9_N15");
	EXPECT_EQ(arch.cells[5].config.hidden_layers, 9u);
	EXPECT_EQ(arch.cells[5].config.neurons, 15u);
	EXPECT_EQ(arch.cells[5].config.output_dir, dir / "out" / "L9_N15");
	EXPECT_EQ(arch.cells[5].config.max_iters, 5u);

	const auto act = load_ablation(dir / "act.cfg");
	ASSERT_EQ(act.cells.size(), 4u);
	EXPECT_EQ(act.cells[1].config.activation, Activation::sigmoid);

	const auto w = load_ablation(dir / "w.cfg");
	ASSERT_EQ(w.cells.size(), 7u);
	EXPECT_EQ(w.cells[2].config.weights.w0, 1.5);
	EXPECT_EQ(w.cells[2].config.weights.w_ode, 0.5);
	EXPECT_EQ(w.cells[2].config.weights.w_y, 1.0);
	EXPECT_EQ(w.cells[6].config.weights.w_ode, 1.5);
}

TEST(Ablation, BadGridsRejected)
{
	const auto dir = scratch("badgrids");
	write(dir / "base.cfg", "[training]\nmax_iters = 5\n");
	write(dir / "axis.cfg", "[ablation]\nbase = base.cfg\naxis = dropout\n");
	write(dir / "case.cfg", "[ablation]\nbase = base.cfg\naxis = weights\nweight_cases = 8\n");
	write(dir / "act.cfg", "[ablation]\nbase = base.cfg\naxis = activation\nactivations = gelu\n");
	EXPECT_THROW(load_ablation(dir / "axis.cfg"), ConfigError);
	EXPECT_THROW(load_ablation(dir / "case.cfg"), ConfigError);
	EXPECT_THROW(load_ablation(dir / "act.cfg"), ConfigError);
	EXPECT_THROW(load_ablation(dir / "missing.cfg"), IoError);
}

TEST(Ablation, FailedCellDoesNotAbortGrid)
{
	const auto dir = scratch("ablate_run");
	AblationGrid grid;
	grid.output_dir = dir;
	auto ok = quick(dir / "ok");
	ok.max_iters = ok.patience = 5;
	auto bad = ok;
	bad.lr = 1e300;
	bad.max_iters = bad.patience = 20;
	grid.cells = {{"ok", ok}, {"bad", bad}, {"ok2", ok}};
	grid.cells[2].config.output_dir = dir / "ok2";
	const auto rows = run_ablation(grid, 2);
	ASSERT_EQ(rows.size(), 3u);
	EXPECT_EQ(rows[0].status, "ok");
	EXPECT_EQ(rows[1].status, "diverged");
	EXPECT_EQ(rows[2].status, "ok");
	EXPECT_TRUE(std::isfinite(rows[0].rmse));

	std::istringstream csv(slurp(dir / "ablation.csv"));
	std::string line;
	std::getline(csv, line);
	EXPECT_EQ(line.rfind("cell,status,rmse,mae,inference_ms,train_s,conv_iter,best_loss,iterations", 0), 0u);
	std::size_t n = 0;
	while (std::getline(csv, line)) ++n;
	EXPECT_EQ(n, 3u);
}

TEST(Ablation, WeightCases)
{
	const auto &c = weight_cases();
	ASSERT_EQ(c.size(), 7u);
	EXPECT_EQ(c[0].w0, 1.0);
	EXPECT_EQ(c[5].w_y, 0.5);
	EXPECT_EQ(c[6].w0, 2.0);
}
