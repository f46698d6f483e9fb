#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pinnobs/evaluator.hpp"
#include "pinnobs/rng.hpp"

using namespace pinnobs;

namespace {

Trajectory make_traj(std::vector<double> states, std::size_t n_x)
{
	Trajectory tr;
	tr.n_x = n_x;
	tr.states = std::move(states);
	for (std::size_t i = 0; i < tr.states.size() / n_x; ++i) tr.times.push_back(0.5 * double(i));
	return tr;
}

Trajectory random_traj(std::uint64_t seed, std::size_t n, std::size_t n_x)
{
	SplitMix rng(seed);
	std::vector<double> v(n * n_x);
	for (double &x : v) x = rng.uniform(-3, 3);
	return make_traj(v, n_x);
}

NetworkParams zero_gain_head(const SystemModel &s, std::uint64_t seed)
{
	auto p = init_params(LayerSpec::observer(s.n_x, s.m, 2, 6), seed);
	const std::size_t last = p.spec().layer_count() - 1;
	for (std::size_t r = s.n_x; r < p.spec().output_width(); ++r) {
		p.bias(last, r) = 0.0;
		for (std::size_t c = 0; c < p.spec().widths[last]; ++c) p.weight(last, r, c) = 0.0;
	}
	return p;
}

}  // namespace

TEST(Metrics, IdentityIsZero)
{
	const auto a = random_traj(1, 50, 3);
	const auto r = metrics(a, a);
	EXPECT_EQ(r.mae(), 0.0);
	EXPECT_EQ(r.mse(), 0.0);
	EXPECT_EQ(r.rmse(), 0.0);
	EXPECT_EQ(r.smape_percent(), 0.0);
}

TEST(Metrics, SinglePair)
{
	const auto r = metrics(make_traj({1.0}, 1), make_traj({0.5}, 1));
	EXPECT_EQ(r.mae(), 0.5);
	EXPECT_EQ(r.mse(), 0.25);
	EXPECT_EQ(r.rmse(), 0.5);
	EXPECT_NEAR(r.smape_percent(), 200.0 / 3.0, 1e-9);
}

TEST(Metrics, RmseIsSqrtMse)
{
	for (std::uint64_t seed = 0; seed < 20; ++seed) {
		const auto r = metrics(random_traj(seed, 40, 2), random_traj(seed + 100, 40, 2));
		EXPECT_EQ(r.rmse(), std::sqrt(r.mse()));
		for (const auto &s : r.per_state) EXPECT_EQ(s.rmse, std::sqrt(s.mse));
	}
}

TEST(Metrics, Symmetry)
{
	const auto a = random_traj(3, 30, 2), b = random_traj(4, 30, 2);
	const auto ab = metrics(a, b), ba = metrics(b, a);
	EXPECT_EQ(ab.mae(), ba.mae());
	EXPECT_EQ(ab.mse(), ba.mse());
	EXPECT_EQ(ab.smape_percent(), ba.smape_percent());
}

TEST(Metrics, Scaling)
{
	const auto a = random_traj(5, 30, 2), b = random_traj(6, 30, 2);
	const double c = 3.5;
	auto sa = a, sb = b;
	for (double &v : sa.states) v *= c;
	for (double &v : sb.states) v *= c;
	const auto r = metrics(a, b), rs = metrics(sa, sb);
	EXPECT_NEAR(rs.mae(), c * r.mae(), 1e-12 * rs.mae());
	EXPECT_NEAR(rs.mse(), c * c * r.mse(), 1e-12 * rs.mse());
	EXPECT_NEAR(rs.smape_percent(), r.smape_percent(), 1e-12 * r.smape_percent());
}

TEST(Metrics, SmapeGuardAndBound)
{
	const auto r = metrics(make_traj({0.0, 0.0, 1.0, -1.0}, 1), make_traj({0.0, 1e-13, -1.0, 1.0}, 1));
	// terms: 0 (guarded), 0 (guarded), 200, 200
	EXPECT_NEAR(r.smape_percent(), 100.0, 1e-9);
	for (std::uint64_t seed = 0; seed < 10; ++seed) {
		const auto q = metrics(random_traj(seed, 20, 1), random_traj(seed + 7, 20, 1));
		EXPECT_LE(q.smape_percent(), 200.0);
		EXPECT_GE(q.smape_percent(), 0.0);
	}
}

TEST(Metrics, GridMismatchRejected)
{
	const auto a = random_traj(1, 10, 2);
	EXPECT_THROW(metrics(a, random_traj(1, 11, 2)), ContractError);
	EXPECT_THROW(metrics(a, random_traj(1, 10, 1)), ContractError);
	auto shifted = a;
	shifted.times[3] += 1e-3;
	EXPECT_THROW(metrics(a, shifted), ContractError);
}

TEST(Metrics, PerStateAndPerTime)
{
	const auto truth = make_traj({1, 2, 3, 4}, 2);
	const auto est = make_traj({1, 0, 5, 4}, 2);
	const auto r = metrics(truth, est);
	ASSERT_EQ(r.per_state.size(), 2u);
	EXPECT_EQ(r.per_state[0].mae, 1.0);
	EXPECT_EQ(r.per_state[1].mae, 1.0);
	EXPECT_EQ(r.per_state[0].mse, 2.0);
	EXPECT_EQ(r.per_time_error.states, (std::vector<double>{0, 2, 2, 0}));
	EXPECT_EQ(r.per_time_error.times, truth.times);
	const std::vector<std::size_t> second{1};
	EXPECT_EQ(metrics_over(truth, est, second).mse, 2.0);
}

TEST(Metrics, UnmeasuredStates)
{
	EXPECT_EQ(unmeasured_states(make_system("reverse_duffing")), (std::vector<std::size_t>{1}));
	EXPECT_EQ(unmeasured_states(make_system("induction_motor")), (std::vector<std::size_t>{2, 3, 4}));
}

TEST(Metrics, KeyValueFile)
{
	const auto r = metrics(make_traj({1, 2}, 2), make_traj({0.5, 2}, 2));
	const auto kv = metrics_key_values(r, "test_");
	ASSERT_GE(kv.size(), 12u);
	EXPECT_EQ(kv[0].first, "test_mae");
	EXPECT_EQ(kv[1].first, "test_mse");
	EXPECT_EQ(kv[2].first, "test_rmse");
	EXPECT_EQ(kv[3].first, "test_smape_percent");
	EXPECT_EQ(kv[4].first, "test_mae_x1");
	const auto path = std::filesystem::temp_directory_path() / "pinnobs_metrics.txt";
	write_key_values(kv, path);
	const auto back = read_key_values(path);
	EXPECT_EQ(back, kv);
	EXPECT_EQ(std::stod(back[0].second), r.mae());
}

TEST(Replay, ZeroGainEqualsOpenLoopBitForBit)
{
	for (const auto &s : registry()) {
		const auto truth = simulate(s, s.x0, 1.0, s.dt);
		const auto est = replay_observer(s, zero_gain_head(s, 3), s.xhat0,
		                                 MeasurementSeries::from_trajectory(truth, s), 1.0, s.dt);
		const auto open = simulate(s, s.xhat0, 1.0, s.dt);
		EXPECT_EQ(est.times, open.times) << s.name;
		EXPECT_EQ(est.states, open.states) << s.name;
	}
}

TEST(Replay, StartingOnTruthStaysOnTruth)
{
	const auto s = make_system("reverse_duffing");
	auto p = init_params(LayerSpec::observer(2, 1, 2, 6), 4);
	const auto truth = simulate(s, s.x0, 1.0, s.dt);
	const auto est = replay_observer(s, p, s.x0, MeasurementSeries::from_trajectory(truth, s),
	                                 1.0, s.dt);
	double worst = 0;
	for (std::size_t i = 0; i < truth.states.size(); ++i) {
		worst = std::max(worst, std::abs(truth.states[i] - est.states[i]));
	}
	EXPECT_LE(worst, 1e-6) << worst;
}

TEST(Replay, Deterministic)
{
	const auto s = make_system("harmonic_oscillator");
	const auto p = init_params(LayerSpec::observer(3, 1, 2, 6), 5);
	const auto truth = simulate(s, s.x0, 2.0, s.dt);
	const auto m = MeasurementSeries::from_trajectory(truth, s);
	EXPECT_EQ(replay_observer(s, p, s.xhat0, m, 2.0, s.dt).states,
	          replay_observer(s, p, s.xhat0, m, 2.0, s.dt).states);
}

TEST(Replay, MeasurementWindowEnforced)
{
	const auto s = make_system("reverse_duffing");
	const auto p = init_params(LayerSpec::observer(2, 1, 2, 6), 5);
	const auto truth = simulate(s, s.x0, 1.0, s.dt);
	EXPECT_THROW(replay_observer(s, p, s.xhat0, MeasurementSeries::from_trajectory(truth, s), 2.0, s.dt),
	             ContractError);
}

TEST(Inference, PositiveTiming)
{
	const auto s = make_system("reverse_duffing");
	const auto p = init_params(LayerSpec::observer(2, 1, 9, 20), 1);
	const double ms = inference_time_ms(p, s, 50);
	EXPECT_GT(ms, 0.0);
	EXPECT_LT(ms, 100.0);
}

TEST(Predict, SelectsRows)
{
	const auto tr = random_traj(9, 10, 2);
	const std::vector<std::size_t> rows{1, 4, 9};
	const auto sel = select_rows(tr, rows);
	ASSERT_EQ(sel.size(), 3u);
	EXPECT_EQ(sel.times[1], tr.times[4]);
	EXPECT_EQ(sel.at(2, 1), tr.at(9, 1));
}
