#include "pinnobs/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pinnobs/rng.hpp"

namespace pinnobs {

std::size_t grid_steps(double horizon, double dt)
{
	const double ratio = horizon / dt;
	const double steps = std::floor(ratio + 1e-9 * std::max(1.0, ratio));
	if (steps + 1.0 > static_cast<double>(max_grid_points)) {
		throw ContractError("grid of " + std::to_string(steps) +
		                    " steps exceeds the size budget");
	}
	return static_cast<std::size_t>(steps);
}

Trajectory simulate(const SystemModel &sys, std::span<const double> x0, double horizon,
                    double dt)
{
	if (x0.size() != sys.n_x) {
		throw ContractError("simulate: initial state has wrong length");
	}
	auto rhs = [&sys](std::span<const double> x, double t, std::span<double> out) {
		sys.drift(x, t, out);
		std::array<double, 8> bu{};
		forcing(sys, t, std::span<double>(bu.data(), sys.n_x));
		for (std::size_t i = 0; i < sys.n_x; ++i) out[i] += bu[i];
	};
	return integrate(rhs, x0, horizon, dt, sys.substeps);
}

TrainingDataset build_dataset(const Trajectory &traj, const SystemModel &sys,
                              std::uint64_t split_seed)
{
	if (traj.size() == 0) {
		throw ContractError("build_dataset: empty trajectory");
	}
	TrainingDataset ds;
	ds.m = sys.m;
	ds.times = traj.times;
	ds.xhat0 = sys.xhat0;
	ds.measurements.resize(traj.size() * sys.m);
	for (std::size_t i = 0; i < traj.size(); ++i) {
		output(sys, traj.state(i), std::span<double>(ds.measurements.data() + i * sys.m, sys.m));
	}

	const std::size_t n = traj.size();
	const auto n_train = std::max<std::size_t>(
	    1, static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n))));
	std::vector<std::size_t> rest(n - 1);
	for (std::size_t i = 1; i < n; ++i) rest[i - 1] = i;
	SplitMix rng(split_seed);
	rng.shuffle(rest);
	ds.train.push_back(0);
	ds.train.insert(ds.train.end(), rest.begin(), rest.begin() + (n_train - 1));
	ds.test.assign(rest.begin() + (n_train - 1), rest.end());
	std::sort(ds.train.begin(), ds.train.end());
	std::sort(ds.test.begin(), ds.test.end());
	return ds;
}

MeasurementSeries::MeasurementSeries(std::vector<double> times, std::vector<double> values,
                                     std::size_t m)
    : m_times(std::move(times)), m_values(std::move(values)), m_m(m)
{
	if (m_times.empty() || m_values.size() != m_times.size() * m_m) {
		throw ContractError("measurement series: inconsistent sizes");
	}
	for (std::size_t i = 1; i < m_times.size(); ++i) {
		if (!(m_times[i] > m_times[i - 1])) {
			throw ContractError("measurement series: times must increase");
		}
	}
	m_dt = m_times.size() > 1 ? m_times[1] - m_times[0] : 0.0;
	m_uniform = m_times.size() > 1;
	for (std::size_t i = 1; m_uniform && i < m_times.size(); ++i) {
		const double expect = m_times[0] + static_cast<double>(i) * m_dt;
		m_uniform = std::abs(m_times[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect));
	}
}

MeasurementSeries MeasurementSeries::from_trajectory(const Trajectory &traj,
                                                     const SystemModel &sys)
{
	std::vector<double> y(traj.size() * sys.m);
	for (std::size_t i = 0; i < traj.size(); ++i) {
		output(sys, traj.state(i), std::span<double>(y.data() + i * sys.m, sys.m));
	}
	return MeasurementSeries(traj.times, std::move(y), sys.m);
}

void MeasurementSeries::at(double t, std::span<double> y) const
{
	const double lo = m_times.front(), hi = m_times.back();
	const double slack = 1e-9 * std::max(1.0, std::abs(hi));
	if (!(t >= lo - slack && t <= hi + slack)) {
		throw ContractError("measurement queried at t=" + std::to_string(t) +
		                    " outside [" + std::to_string(lo) + ", " +
		                    std::to_string(hi) + "]");
	}
	const std::size_t n = m_times.size();
	if (n == 1 || t <= lo) {
		std::copy_n(m_values.begin(), m_m, y.begin());
		return;
	}
	if (t >= hi) {
		std::copy_n(m_values.begin() + (n - 1) * m_m, m_m, y.begin());
		return;
	}
	std::size_t i;
	if (m_uniform) {
		i = std::min(n - 2, static_cast<std::size_t>((t - lo) / m_dt));
		// Guard against rounding placing t just outside [t_i, t_{i+1}].
		while (i > 0 && t < m_times[i]) --i;
		while (i + 2 < n && t > m_times[i + 1]) ++i;
	} else {
		i = static_cast<std::size_t>(std::upper_bound(m_times.begin(), m_times.end(), t) -
		                             m_times.begin()) - 1;
	}
	const double w = (t - m_times[i]) / (m_times[i + 1] - m_times[i]);
	for (std::size_t k = 0; k < m_m; ++k) {
		const double a = m_values[i * m_m + k], b = m_values[(i + 1) * m_m + k];
		y[k] = w == 0.0 ? a : a + w * (b - a);
	}
}

void write_trajectory_csv(const Trajectory &traj, const std::filesystem::path &path,
                          const std::string &column_prefix)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) {
		throw IoError("cannot open " + path.string() + " for writing");
	}
	os << 't';
	for (std::size_t k = 0; k < traj.n_x; ++k) os << ',' << column_prefix << (k + 1);
	os << '\n';
	char buf[64];
	for (std::size_t i = 0; i < traj.size(); ++i) {
		std::snprintf(buf, sizeof buf, "%.17g", traj.times[i]);
		os << buf;
		for (std::size_t k = 0; k < traj.n_x; ++k) {
			std::snprintf(buf, sizeof buf, ",%.17g", traj.at(i, k));
			os << buf;
		}
		os << '\n';
	}
	if (!os) {
		throw IoError("write failed: " + path.string());
	}
}

Trajectory read_trajectory_csv(const std::filesystem::path &path)
{
	std::ifstream is(path);
	if (!is) {
		throw IoError("cannot open " + path.string());
	}
	std::string line;
	if (!std::getline(is, line) || line.empty() || line[0] != 't') {
		throw IoError(path.string() + ": missing header");
	}
	Trajectory tr;
	tr.n_x = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
	std::size_t row = 1;
	while (std::getline(is, line)) {
		++row;
		if (line.empty()) continue;
		std::vector<double> vals;
		const char *p = line.c_str();
		while (true) {
			char *end = nullptr;
			vals.push_back(std::strtod(p, &end));
			if (end == p) {
				throw IoError(path.string() + ": bad number on line " + std::to_string(row));
			}
			if (*end == ',') {
				p = end + 1;
			} else if (*end == '\0' || *end == '\r') {
				break;
			} else {
				throw IoError(path.string() + ": bad number on line " + std::to_string(row));
			}
		}
		if (vals.size() != tr.n_x + 1) {
			throw IoError(path.string() + ": wrong column count on line " + std::to_string(row));
		}
		tr.times.push_back(vals[0]);
		tr.states.insert(tr.states.end(), vals.begin() + 1, vals.end());
	}
	return tr;
}

}  // namespace pinnobs
