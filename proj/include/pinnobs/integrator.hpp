#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinnobs/errors.hpp"
#include "pinnobs/systems.hpp"

namespace pinnobs {

/// Uniform time grid t_i = i * dt with an (N+1) x n_x row-major state matrix.
struct Trajectory {
	std::vector<double> times;
	std::vector<double> states;
	std::size_t n_x = 0;

	std::size_t size() const { return times.size(); }
	std::span<const double> state(std::size_t i) const
	{
		return {states.data() + i * n_x, n_x};
	}
	double at(std::size_t i, std::size_t k) const { return states[i * n_x + k]; }
};

/// Integration left the finite range; `partial` holds the samples computed before.
class TrajectoryBlowUp : public NumericalError {
public:
	TrajectoryBlowUp(const std::string &what, Trajectory partial, double time)
	    : NumericalError(what), m_partial(std::move(partial)), m_time(time)
	{
	}
	const Trajectory &partial() const noexcept { return m_partial; }
	double time() const noexcept { return m_time; }

private:
	Trajectory m_partial;
	double m_time;
};

/**
 * Sampled measurements y_i = C x(t_i) plus the observer's initial estimate.
 * Deliberately carries no states: the training loss can only see what a
 * sensor would provide.
 */
struct TrainingDataset {
	std::vector<double> times;
	std::vector<double> measurements;  ///< size() x m, row-major
	std::size_t m = 0;
	std::vector<double> xhat0;
	std::vector<std::size_t> train;  ///< sorted, contains index 0
	std::vector<std::size_t> test;   ///< sorted

	std::size_t size() const { return times.size(); }
	std::span<const double> measurement(std::size_t i) const
	{
		return {measurements.data() + i * m, m};
	}
};

/// Fraction of samples assigned to the training split.
inline constexpr double train_fraction = 0.6;

/// Largest grid accepted by simulate().
inline constexpr std::size_t max_grid_points = 20'000'000;

/**
 * One classical Runge-Kutta 4 step of x' = rhs(x, t). `rhs(x, t, out)` writes
 * the derivative. Throws NumericalError on a non-finite stage.
 */
template <typename Rhs>
void rk4_step(Rhs &&rhs, std::span<const double> x, double t, double dt,
              std::span<double> out)
{
	if (!(dt > 0.0)) {
		throw ContractError("rk4_step: dt must be positive");
	}
	const std::size_t n = x.size();
	std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
	auto finite = [&](const std::vector<double> &k, const char *stage) {
		for (double v : k) {
			if (!std::isfinite(v)) {
				throw NumericalError(std::string("rk4 stage ") + stage +
				                     " non-finite at t=" + std::to_string(t));
			}
		}
	};
	const double h2 = 0.5 * dt;
	rhs(x, t, std::span<double>(k1));
	finite(k1, "1");
	for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h2 * k1[i];
	rhs(std::span<const double>(tmp), t + h2, std::span<double>(k2));
	finite(k2, "2");
	for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h2 * k2[i];
	rhs(std::span<const double>(tmp), t + h2, std::span<double>(k3));
	finite(k3, "3");
	for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
	rhs(std::span<const double>(tmp), t + dt, std::span<double>(k4));
	finite(k4, "4");
	for (std::size_t i = 0; i < n; ++i) {
		out[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
	}
}

/// Number of grid steps floor(T / dt), tolerant to rounding in T / dt.
std::size_t grid_steps(double horizon, double dt);

/**
 * Fixed-step RK4 integration of an arbitrary right-hand side, sampled on the
 * grid i * dt, i = 0..floor(T/dt). Each sample interval is covered by
 * `substeps` RK4 steps of dt / substeps. Throws TrajectoryBlowUp naming the
 * failing time.
 */
template <typename Rhs>
Trajectory integrate(Rhs &&rhs, std::span<const double> x0, double horizon, double dt,
                     std::size_t substeps = 1)
{
	if (!(horizon >= 0.0) || !(dt > 0.0) || substeps == 0) {
		throw ContractError("integrate: need T >= 0, dt > 0 and substeps >= 1");
	}
	const std::size_t steps = grid_steps(horizon, dt);
	Trajectory tr;
	tr.n_x = x0.size();
	tr.times.resize(steps + 1);
	tr.states.resize((steps + 1) * tr.n_x);
	std::copy(x0.begin(), x0.end(), tr.states.begin());
	tr.times[0] = 0.0;
	const double h = dt / static_cast<double>(substeps);
	std::vector<double> a, b;
	if (substeps > 1) {
		a.resize(tr.n_x);
		b.resize(tr.n_x);
	}
	for (std::size_t i = 0; i < steps; ++i) {
		const double t = static_cast<double>(i) * dt;
		std::span<const double> cur(tr.states.data() + i * tr.n_x, tr.n_x);
		std::span<double> next(tr.states.data() + (i + 1) * tr.n_x, tr.n_x);
		double ts = t;
		try {
			if (substeps == 1) {
				rk4_step(rhs, cur, t, dt, next);
			} else {
				std::copy(cur.begin(), cur.end(), a.begin());
				for (std::size_t s = 0; s + 1 < substeps; ++s) {
					ts = t + static_cast<double>(s) * h;
					rk4_step(rhs, std::span<const double>(a), ts, h, std::span<double>(b));
					a.swap(b);
				}
				ts = t + static_cast<double>(substeps - 1) * h;
				rk4_step(rhs, std::span<const double>(a), ts, h, next);
			}
		} catch (const NumericalError &e) {
			tr.times.resize(i + 1);
			tr.states.resize((i + 1) * tr.n_x);
			throw TrajectoryBlowUp("trajectory blow-up near t=" + std::to_string(ts) + " (" +
			                           e.what() + ")",
			                       std::move(tr), ts);
		}
		tr.times[i + 1] = static_cast<double>(i + 1) * dt;
	}
	return tr;
}

/// Ground-truth trajectory of the plant from x0.
Trajectory simulate(const SystemModel &sys, std::span<const double> x0, double horizon,
                    double dt);

/// Measurements from a trajectory with a seeded 60/40 split (t0 always trains).
TrainingDataset build_dataset(const Trajectory &traj, const SystemModel &sys,
                              std::uint64_t split_seed);

/**
 * Piecewise-linear interpolant of sampled measurements. Queries outside
 * [t_0, t_N] (beyond a relative 1e-9 slack) throw ContractError.
 */
class MeasurementSeries {
public:
	MeasurementSeries(std::vector<double> times, std::vector<double> values, std::size_t m);

	/// Measurements of the full trajectory grid.
	static MeasurementSeries from_trajectory(const Trajectory &traj, const SystemModel &sys);

	std::size_t dim() const { return m_m; }
	void at(double t, std::span<double> y) const;

private:
	std::vector<double> m_times, m_values;
	std::size_t m_m;
	double m_dt;
	bool m_uniform;
};

/// `t,x1,...,xn` CSV with %.17g values and LF line endings.
void write_trajectory_csv(const Trajectory &traj, const std::filesystem::path &path,
                          const std::string &column_prefix = "x");
Trajectory read_trajectory_csv(const std::filesystem::path &path);

}  // namespace pinnobs
