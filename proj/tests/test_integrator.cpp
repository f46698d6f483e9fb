#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "pinnobs/integrator.hpp"

using namespace pinnobs;

namespace {

const auto exp_rhs = [](std::span<const double> x, double, std::span<double> out) { out[0] = x[0]; };

double exp_error(double dt)
{
	const std::vector<double> x0{1.0};
	const auto tr = integrate(exp_rhs, x0, 1.0, dt);
	return std::abs(tr.states.back() - std::exp(1.0));
}

Trajectory ramp(std::size_t n)
{
	Trajectory tr;
	tr.n_x = 2;
	for (std::size_t i = 0; i < n; ++i) {
		tr.times.push_back(0.1 * double(i));
		tr.states.push_back(double(i));
		tr.states.push_back(-2.0 * double(i));
	}
	return tr;
}

}  // namespace

TEST(Rk4, ExponentialStep)
{
	std::vector<double> x{1.0}, out(1);
	rk4_step(exp_rhs, x, 0.0, 0.1, out);
	EXPECT_NEAR(out[0], 1.1051708333333333, 1e-15);
	EXPECT_LT(std::abs(out[0] - std::exp(0.1)), 1e-7);
}

TEST(Rk4, ZeroAndConstantFields)
{
	std::vector<double> x{0.7, -3.0}, out(2);
	rk4_step([](auto, double, std::span<double> o) { o[0] = o[1] = 0.0; }, x, 0.0, 0.3, out);
	EXPECT_EQ(out, x);
	std::vector<double> z{0.0}, o1(1);
	rk4_step([](auto, double, std::span<double> o) { o[0] = 1.0; }, z, 0.0, 0.5, o1);
	EXPECT_EQ(o1[0], 0.5);
}

TEST(Rk4, NonFiniteStageThrows)
{
	std::vector<double> x{1.0}, out(1);
	EXPECT_THROW(rk4_step([](auto, double, std::span<double> o) { o[0] = NAN; }, x, 0.0, 0.1, out),
	             NumericalError);
	EXPECT_THROW(rk4_step(exp_rhs, x, 0.0, 0.0, out), ContractError);
}

TEST(Rk4, FourthOrderConvergence)
{
	for (double dt : {0.1, 0.05, 0.025}) {
		const double ratio = exp_error(dt) / exp_error(dt / 2);
		EXPECT_GE(std::log2(ratio), 3.9) << dt;
		EXPECT_GE(ratio, 8.0 * 0.9);
	}
}

TEST(Simulate, EmptyHorizon)
{
	for (const auto &s : registry()) {
		const auto tr = simulate(s, s.x0, 0.0, s.dt);
		ASSERT_EQ(tr.size(), 1u);
		EXPECT_EQ(tr.times[0], 0.0);
		EXPECT_EQ(std::vector<double>(tr.states.begin(), tr.states.end()), s.x0);
	}
}

TEST(Simulate, GridShape)
{
	const auto s = make_system("reverse_duffing");
	const auto tr = simulate(s, s.x0, 20.0, 2e-3);
	ASSERT_EQ(tr.size(), 10001u);
	EXPECT_EQ(tr.times[0], 0.0);
	for (std::size_t i = 1; i < tr.size(); ++i) {
		EXPECT_NEAR(tr.times[i], static_cast<double>(i) * 2e-3, 1e-12 * tr.times[i]);
	}
	EXPECT_EQ(grid_steps(1.0, 0.1), 10u);
	EXPECT_EQ(grid_steps(0.3, 0.1), 3u);
	EXPECT_EQ(grid_steps(0.35, 0.1), 3u);
}

TEST(Simulate, GridBudgetEnforced)
{
	const auto s = make_system("reverse_duffing");
	EXPECT_THROW(simulate(s, s.x0, 1e6, 1e-3), ContractError);
	EXPECT_THROW(simulate(s, s.x0, 1.0, 0.0), ContractError);
	EXPECT_THROW(simulate(s, std::vector<double>{1.0}, 1.0, 0.1), ContractError);
}

TEST(Simulate, BlowUpNamesTime)
{
	const std::vector<double> x0{1.0};
	try {
		integrate([](std::span<const double> x, double, std::span<double> o) { o[0] = x[0] * x[0]; },
		          x0, 2.0, 1e-3);
		FAIL() << "expected blow-up";
	} catch (const NumericalError &e) {
		const std::string msg = e.what();
		const auto at = msg.find("t=");
		ASSERT_NE(at, std::string::npos) << msg;
		const double t = std::stod(msg.substr(at + 2));
		EXPECT_GT(t, 0.99) << msg;
		EXPECT_LT(t, 1.01) << msg;
	}
}

TEST(Simulate, HarmonicAnalytic)
{
	const auto s = make_system("harmonic_oscillator");
	const auto tr = simulate(s, std::vector<double>{0, 1, 3}, 20.0, 1e-3);
	const double w = std::sqrt(3.0);
	double worst = 0;
	for (std::size_t i = 0; i < tr.size(); ++i) {
		const double t = tr.times[i];
		worst = std::max(worst, std::abs(tr.at(i, 0) - std::sin(w * t) / w));
		worst = std::max(worst, std::abs(tr.at(i, 1) - std::cos(w * t)));
		EXPECT_EQ(tr.at(i, 2), 3.0);
	}
	EXPECT_LE(worst, 1e-6);
}

TEST(Simulate, DuffingEnergyDrift)
{
	const auto s = make_system("reverse_duffing");
	const auto tr = simulate(s, s.x0, 20.0, 2e-3);
	auto E = [&](std::size_t i) { return std::pow(tr.at(i, 0), 2) + std::pow(tr.at(i, 1), 4) / 2; };
	const double e0 = E(0);
	double worst = 0;
	for (std::size_t i = 0; i < tr.size(); ++i) worst = std::max(worst, std::abs(E(i) - e0) / e0);
	EXPECT_LE(worst, 1e-8);
}

TEST(Simulate, RigidBodyInvariantsDrift)
{
	const auto s = make_system("rigid_body");
	const auto tr = simulate(s, s.x0, 20.0, 2e-3);
	const double I[3] = {3, 2, 1};
	auto q = [&](std::size_t i, int power) {
		double v = 0;
		for (int k = 0; k < 3; ++k) v += std::pow(I[k], power) * tr.at(i, k) * tr.at(i, k);
		return v;
	};
	const double a0 = q(0, 1), b0 = q(0, 2);
	double worst = 0;
	for (std::size_t i = 0; i < tr.size(); ++i) {
		worst = std::max({worst, std::abs(q(i, 1) - a0) / a0, std::abs(q(i, 2) - b0) / b0});
	}
	EXPECT_LE(worst, 1e-8);
}

TEST(Simulate, StepHalvingAllSystems)
{
	for (const auto &s : registry()) {
		const auto a = simulate(s, s.x0, s.horizon, s.dt);
		const auto b = simulate(s, s.x0, s.horizon, s.dt / 2);
		ASSERT_EQ(b.size(), 2 * a.size() - 1) << s.name;
		double worst = 0;
		for (std::size_t i = 0; i < a.size(); ++i) {
			for (std::size_t k = 0; k < s.n_x; ++k) {
				worst = std::max(worst, std::abs(a.at(i, k) - b.at(2 * i, k)));
			}
		}
		EXPECT_LE(worst, 1e-6) << s.name;
	}
}

TEST(Simulate, SingleSubstepIsPlainRk4)
{
	auto s = make_system("academic_ex4");
	ASSERT_EQ(s.substeps, 1u);
	const auto tr = simulate(s, s.x0, 0.1, 0.01);
	std::vector<double> x = s.x0, next(2);
	for (std::size_t i = 0; i < 10; ++i) {
		rk4_step([&](std::span<const double> xx, double t, std::span<double> o) { dynamics(s, xx, t, o); },
		         x, double(i) * 0.01, 0.01, next);
		x = next;
	}
	EXPECT_EQ(tr.states[20], x[0]);
	EXPECT_EQ(tr.states[21], x[1]);
}

TEST(Simulate, SubstepsMatchFinerGrid)
{
	auto s = make_system("reverse_duffing");
	s.substeps = 4;
	const auto coarse = simulate(s, s.x0, 2.0, 0.02);
	s.substeps = 1;
	const auto fine = simulate(s, s.x0, 2.0, 0.005);
	for (std::size_t i = 0; i < coarse.size(); ++i) {
		EXPECT_NEAR(coarse.at(i, 0), fine.at(4 * i, 0), 1e-13);
		EXPECT_NEAR(coarse.at(i, 1), fine.at(4 * i, 1), 1e-13);
	}
}

TEST(Dataset, SplitArithmetic)
{
	const auto s = make_system("reverse_duffing");
	const auto tr = simulate(s, s.x0, 9 * s.dt, s.dt);
	ASSERT_EQ(tr.size(), 10u);
	const auto ds = build_dataset(tr, s, 1);
	EXPECT_EQ(ds.train.size(), 6u);
	EXPECT_EQ(ds.test.size(), 4u);
	std::set<std::size_t> all(ds.train.begin(), ds.train.end());
	all.insert(ds.test.begin(), ds.test.end());
	EXPECT_EQ(all.size(), 10u);
	EXPECT_EQ(ds.train.front(), 0u);
	EXPECT_TRUE(std::is_sorted(ds.train.begin(), ds.train.end()));
	EXPECT_TRUE(std::is_sorted(ds.test.begin(), ds.test.end()));
}

TEST(Dataset, AnchorAlwaysTrains)
{
	const auto s = make_system("reverse_duffing");
	const auto tr = simulate(s, s.x0, 99 * s.dt, s.dt);
	for (std::uint64_t seed = 0; seed < 50; ++seed) {
		const auto ds = build_dataset(tr, s, seed);
		EXPECT_EQ(ds.train.front(), 0u);
		EXPECT_EQ(ds.train.size(), 60u);
	}
}

TEST(Dataset, SeedDeterminism)
{
	const auto s = make_system("reverse_duffing");
	const auto tr = simulate(s, s.x0, 2.0, s.dt);
	const auto a = build_dataset(tr, s, 42), b = build_dataset(tr, s, 42), c = build_dataset(tr, s, 43);
	EXPECT_EQ(a.train, b.train);
	EXPECT_EQ(a.test, b.test);
	EXPECT_NE(a.train, c.train);
}

TEST(Dataset, MeasurementsFromOutputMap)
{
	for (const auto &s : registry()) {
		const auto tr = simulate(s, s.x0, 0.5, s.dt);
		const auto ds = build_dataset(tr, s, 3);
		EXPECT_EQ(ds.xhat0, s.xhat0);
		for (std::size_t i = 0; i < tr.size(); ++i) {
			const auto y = output(s, tr.state(i));
			for (std::size_t j = 0; j < s.m; ++j) EXPECT_EQ(ds.measurement(i)[j], y[j]);
		}
	}
	const auto duff = make_system("reverse_duffing");
	const auto tr = simulate(duff, duff.x0, 1.0, duff.dt);
	const auto ds = build_dataset(tr, duff, 3);
	for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(ds.measurement(i)[0], tr.at(i, 0));
}

TEST(Measurements, LinearInterpolation)
{
	MeasurementSeries ms({0.0, 1.0, 2.0}, {0.0, 10.0, 20.0, 4.0, 6.0, 6.0}, 2);
	std::vector<double> y(2);
	ms.at(1.0, y);
	EXPECT_EQ(y[0], 20.0);
	EXPECT_EQ(y[1], 4.0);
	ms.at(0.25, y);
	EXPECT_DOUBLE_EQ(y[0], 5.0);
	EXPECT_DOUBLE_EQ(y[1], 8.5);
	ms.at(2.0, y);
	EXPECT_EQ(y[0], 6.0);
	EXPECT_THROW(ms.at(2.1, y), ContractError);
	EXPECT_THROW(ms.at(-0.1, y), ContractError);
}

TEST(TrajectoryCsv, RoundTripBitExact)
{
	auto tr = ramp(5);
	tr.states[3] = 0.1 + 0.2;
	tr.states[4] = -1e-300;
	const auto path = std::filesystem::temp_directory_path() / "pinnobs_traj.csv";
	write_trajectory_csv(tr, path);
	std::ifstream is(path);
	std::string header;
	std::getline(is, header);
	EXPECT_EQ(header, "t,x1,x2");
	const auto back = read_trajectory_csv(path);
	EXPECT_EQ(back.times, tr.times);
	EXPECT_EQ(back.states, tr.states);
	EXPECT_EQ(back.n_x, 2u);
}

TEST(TrajectoryCsv, MalformedRejected)
{
	const auto path = std::filesystem::temp_directory_path() / "pinnobs_bad.csv";
	{
		std::ofstream os(path);
		os << "t,x1\n0,1\n0.1,abc\n";
	}
	EXPECT_THROW(read_trajectory_csv(path), IoError);
	EXPECT_THROW(read_trajectory_csv(path.string() + ".missing"), IoError);
}
