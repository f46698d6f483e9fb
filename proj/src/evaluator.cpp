#include "pinnobs/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace pinnobs {

namespace {

struct Accum {
	double abs = 0.0, sq = 0.0, smape = 0.0;
	std::size_t n = 0;

	void add(double x, double xh)
	{
		const double d = std::abs(x - xh);
		abs += d;
		sq += d * d;
		const double denom = std::abs(x) + std::abs(xh);
		if (denom >= smape_floor) smape += d / (0.5 * denom);
		++n;
	}

	ErrorMetrics finish() const
	{
		ErrorMetrics m;
		if (n == 0) return m;
		const double dn = static_cast<double>(n);
		m.mae = abs / dn;
		m.mse = sq / dn;
		m.rmse = std::sqrt(m.mse);
		m.smape_percent = 100.0 * smape / dn;
		return m;
	}
};

void check_grids(const Trajectory &a, const Trajectory &b)
{
	if (a.size() != b.size() || a.n_x != b.n_x) {
		throw ContractError("metrics: trajectories have different shapes");
	}
	for (std::size_t i = 0; i < a.size(); ++i) {
		const double tol = 1e-9 * std::max(1.0, std::abs(a.times[i]));
		if (std::abs(a.times[i] - b.times[i]) > tol) {
			throw ContractError("metrics: time grids differ at row " + std::to_string(i));
		}
	}
}

}  // namespace

std::string format_double(double v)
{
	char buf[64];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

MetricsReport metrics(const Trajectory &truth, const Trajectory &estimate)
{
	check_grids(truth, estimate);
	MetricsReport r;
	const std::size_t nx = truth.n_x;
	Accum all;
	std::vector<Accum> per(nx);
	r.per_time_error.n_x = nx;
	r.per_time_error.times = truth.times;
	r.per_time_error.states.resize(truth.states.size());
	for (std::size_t i = 0; i < truth.size(); ++i) {
		for (std::size_t k = 0; k < nx; ++k) {
			const double x = truth.at(i, k), xh = estimate.at(i, k);
			all.add(x, xh);
			per[k].add(x, xh);
			r.per_time_error.states[i * nx + k] = std::abs(x - xh);
		}
	}
	r.all = all.finish();
	for (const auto &a : per) r.per_state.push_back(a.finish());
	return r;
}

ErrorMetrics metrics_over(const Trajectory &truth, const Trajectory &estimate,
                          std::span<const std::size_t> states)
{
	check_grids(truth, estimate);
	Accum acc;
	for (std::size_t i = 0; i < truth.size(); ++i) {
		for (std::size_t k : states) {
			if (k >= truth.n_x) throw ContractError("metrics: state index out of range");
			acc.add(truth.at(i, k), estimate.at(i, k));
		}
	}
	return acc.finish();
}

std::vector<std::size_t> unmeasured_states(const SystemModel &sys)
{
	std::vector<std::size_t> out;
	for (std::size_t k = 0; k < sys.n_x; ++k) {
		bool seen = false;
		for (std::size_t j = 0; j < sys.m; ++j) seen |= sys.C[j * sys.n_x + k] != 0.0;
		if (!seen) out.push_back(k);
	}
	return out;
}

Trajectory replay_observer(const SystemModel &sys, const NetworkParams &params,
                           std::span<const double> xhat0, const MeasurementSeries &measurements,
                           double horizon, double dt)
{
	if (xhat0.size() != sys.n_x || measurements.dim() != sys.m) {
		throw ContractError("replay: dimension mismatch");
	}
	check_heads(params.spec(), sys.n_x, sys.m);
	const std::size_t nx = sys.n_x, m = sys.m;
	std::vector<double> y(m), innov(m);
	auto rhs = [&](std::span<const double> x, double t, std::span<double> out) {
		sys.drift(x, t, out);
		std::array<double, 8> bu{};
		forcing(sys, t, std::span<double>(bu.data(), nx));
		for (std::size_t i = 0; i < nx; ++i) out[i] += bu[i];

		const ObserverOutput o = forward(params, t, nx, m);
		measurements.at(t, y);
		output(sys, x, innov);
		for (std::size_t j = 0; j < m; ++j) innov[j] = y[j] - innov[j];
		for (std::size_t i = 0; i < nx; ++i) {
			for (std::size_t j = 0; j < m; ++j) {
				if (o.gain(i, j) != 0.0) out[i] += o.gain(i, j) * innov[j];
			}
		}
	};
	return integrate(rhs, xhat0, horizon, dt, sys.substeps);
}

Trajectory predict_states(const NetworkParams &params, const SystemModel &sys,
                          std::span<const double> times)
{
	Trajectory tr;
	tr.n_x = sys.n_x;
	tr.times.assign(times.begin(), times.end());
	tr.states.reserve(times.size() * sys.n_x);
	for (double t : times) {
		const ObserverOutput o = forward(params, t, sys.n_x, sys.m);
		tr.states.insert(tr.states.end(), o.state.begin(), o.state.end());
	}
	return tr;
}

Trajectory select_rows(const Trajectory &traj, std::span<const std::size_t> rows)
{
	Trajectory out;
	out.n_x = traj.n_x;
	for (std::size_t i : rows) {
		out.times.push_back(traj.times.at(i));
		const auto s = traj.state(i);
		out.states.insert(out.states.end(), s.begin(), s.end());
	}
	return out;
}

double inference_time_ms(const NetworkParams &params, const SystemModel &sys,
                         std::size_t repeats)
{
	using clock = std::chrono::steady_clock;
	std::vector<double> samples;
	samples.reserve(repeats);
	double sink = 0.0;
	for (std::size_t r = 0; r < repeats; ++r) {
		const double t = sys.horizon * static_cast<double>(r) / static_cast<double>(repeats);
		const auto t0 = clock::now();
		const ObserverOutput o = forward(params, t, sys.n_x, sys.m);
		const auto t1 = clock::now();
		sink += o.state[0];
		samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
	}
	if (samples.empty()) return 0.0;
	auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
	std::nth_element(samples.begin(), mid, samples.end());
	return *mid + 0.0 * sink;
}

KeyValues metrics_key_values(const MetricsReport &r, const std::string &prefix)
{
	KeyValues kv;
	auto put = [&](const std::string &k, double v) { kv.emplace_back(prefix + k, format_double(v)); };
	put("mae", r.all.mae);
	put("mse", r.all.mse);
	put("rmse", r.all.rmse);
	put("smape_percent", r.all.smape_percent);
	for (std::size_t k = 0; k < r.per_state.size(); ++k) {
		const std::string s = "_x" + std::to_string(k + 1);
		put("mae" + s, r.per_state[k].mae);
		put("mse" + s, r.per_state[k].mse);
		put("rmse" + s, r.per_state[k].rmse);
		put("smape_percent" + s, r.per_state[k].smape_percent);
	}
	return kv;
}

void write_key_values(const KeyValues &kv, const std::filesystem::path &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) throw IoError("cannot open " + path.string() + " for writing");
	for (const auto &[k, v] : kv) os << k << " = " << v << '\n';
	if (!os) throw IoError("write failed: " + path.string());
}

KeyValues read_key_values(const std::filesystem::path &path)
{
	std::ifstream is(path);
	if (!is) throw IoError("cannot open " + path.string());
	KeyValues kv;
	std::string line;
	while (std::getline(is, line)) {
		const auto eq = line.find(" = ");
		if (eq == std::string::npos) continue;
		kv.emplace_back(line.substr(0, eq), line.substr(eq + 3));
	}
	return kv;
}

}  // namespace pinnobs
