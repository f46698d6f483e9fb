#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinnobs/integrator.hpp"
#include "pinnobs/network.hpp"
#include "pinnobs/systems.hpp"

namespace pinnobs {

struct ErrorMetrics {
	double mae = 0.0;
	double mse = 0.0;
	double rmse = 0.0;
	double smape_percent = 0.0;
};

struct MetricsReport {
	ErrorMetrics all;                    ///< over every state component and time
	std::vector<ErrorMetrics> per_state;
	Trajectory per_time_error;           ///< |x_i(t) - xhat_i(t)|

	double mae() const { return all.mae; }
	double mse() const { return all.mse; }
	double rmse() const { return all.rmse; }
	double smape_percent() const { return all.smape_percent; }
};

/// SMAPE terms with |x| + |xhat| below this contribute zero.
inline constexpr double smape_floor = 1e-12;

/**
 * MAE, MSE, RMSE = sqrt(MSE) and SMAPE (percent) between two trajectories on
 * the same grid. Throws ContractError on a grid or dimension mismatch.
 */
MetricsReport metrics(const Trajectory &truth, const Trajectory &estimate);

/// Aggregate metrics restricted to the listed state components.
ErrorMetrics metrics_over(const Trajectory &truth, const Trajectory &estimate,
                          std::span<const std::size_t> states);

/// State components with an all-zero column in C.
std::vector<std::size_t> unmeasured_states(const SystemModel &sys);

/**
 * Integrates the observer
 *   xhat' = f(xhat, t) + B u(t) + L(t) (y(t) - C xhat)
 * by RK4 from xhat0 on the grid i * dt, with L(t) taken from the network's
 * gain head at every stage time and y(t) from `measurements`.
 */
Trajectory replay_observer(const SystemModel &sys, const NetworkParams &params,
                           std::span<const double> xhat0, const MeasurementSeries &measurements,
                           double horizon, double dt);

/// Direct network state prediction xhat(t) at the given times.
Trajectory predict_states(const NetworkParams &params, const SystemModel &sys,
                          std::span<const double> times);

/// Rows of `traj` at the given indices.
Trajectory select_rows(const Trajectory &traj, std::span<const std::size_t> rows);

/// Median wall time of `repeats` single-time forward passes, in milliseconds.
double inference_time_ms(const NetworkParams &params, const SystemModel &sys,
                         std::size_t repeats = 1000);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `mae`, `mse`, `rmse`, `smape_percent`, then `<metric>_x<k>` per state.
KeyValues metrics_key_values(const MetricsReport &r, const std::string &prefix = "");

/// `key = value` lines.
void write_key_values(const KeyValues &kv, const std::filesystem::path &path);
KeyValues read_key_values(const std::filesystem::path &path);

/// %.17g formatting used by every artifact.
std::string format_double(double v);

}  // namespace pinnobs
