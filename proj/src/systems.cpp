#include "pinnobs/systems.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "pinnobs/errors.hpp"

namespace pinnobs {

namespace {

using std::sqrt;

constexpr std::size_t max_states = 8;

/// Wraps a generic drift `field(x, out)` (x, out indexable, scalar S) into the
/// three stored forms.
template <typename Field>
void attach_drift(SystemModel &sys, Field field)
{
	const std::size_t n = sys.n_x;
	if (n > max_states) {
		throw ContractError(sys.name + ": too many states");
	}
	sys.drift = [field, n](std::span<const double> x, double, std::span<double> out) {
		std::array<double, max_states> xs{}, r{};
		std::copy(x.begin(), x.end(), xs.begin());
		field(xs, r);
		std::copy_n(r.begin(), n, out.begin());
	};
	sys.drift_tape = [field, n](std::span<const Var> x, double) {
		std::vector<Var> xs(x.begin(), x.end()), r(n);
		field(xs, r);
		return r;
	};
	sys.jacobian = [field, n](std::span<const double> x, double, std::span<double> jac) {
		std::array<Dual<double>, max_states> xs{}, r{};
		for (std::size_t k = 0; k < n; ++k) {
			for (std::size_t i = 0; i < n; ++i) {
				xs[i] = Dual<double>(x[i], i == k ? 1.0 : 0.0);
			}
			field(xs, r);
			for (std::size_t i = 0; i < n; ++i) {
				jac[i * n + k] = r[i].deriv;
			}
		}
	};
}

double param(const ParamMap &p, const std::string &key) { return p.at(key); }

void no_input(SystemModel &sys)
{
	sys.n_u = 1;
	sys.B.assign(sys.n_x, 0.0);
	sys.input = [](double, std::span<double> u) { u[0] = 0.0; };
}

std::vector<double> select_first(std::size_t m, std::size_t n_x)
{
	std::vector<double> c(m * n_x, 0.0);
	for (std::size_t i = 0; i < m; ++i) {
		c[i * n_x + i] = 1.0;
	}
	return c;
}

SystemModel reverse_duffing(const ParamMap &)
{
	SystemModel s;
	s.name = "reverse_duffing";
	s.n_x = 2;
	s.m = 1;
	s.C = select_first(1, 2);
	s.x0 = {2.0, -1.0};
	s.xhat0 = {1.0, 1.0};
	no_input(s);
	attach_drift(s, [](const auto &x, auto &dx) {
		dx[0] = x[1] * x[1] * x[1];
		dx[1] = -x[0];
	});
	return s;
}

SystemModel harmonic_oscillator(const ParamMap &)
{
	SystemModel s;
	s.name = "harmonic_oscillator";
	s.n_x = 3;
	s.m = 1;
	s.C = select_first(1, 3);
	s.x0 = {0.0, 1.0, 3.0};
	s.xhat0 = {0.0, 1.0, -1.0};
	no_input(s);
	attach_drift(s, [](const auto &x, auto &dx) {
		dx[0] = x[1];
		dx[1] = -(x[2] * x[0]);
		dx[2] = x[2] * 0.0;
	});
	return s;
}

SystemModel induction_motor(const ParamMap &p)
{
	SystemModel s;
	s.name = "induction_motor";
	s.n_x = 5;
	s.m = 2;
	s.params = p;
	s.C = select_first(2, 5);
	s.x0 = {1.0, 0.0, 2.0, 3.0, 0.0};
	s.xhat0 = {2.0, 1.0, 0.0, 2.0, 0.0};
	s.substeps = 64;

	const double Rs = param(p, "Rs"), Rr = param(p, "Rr"), M = param(p, "M");
	const double Ls = param(p, "Ls"), Lr = param(p, "Lr"), J = param(p, "J");
	const double TL = param(p, "TL"), np = param(p, "p");
	const double Tr = Lr / Rr;
	const double sigma = 1.0 - M * M / (Ls * Lr);
	const double K = M / (sigma * Ls * Lr);
	const double gamma = Rs / (sigma * Ls) + Rr * M * M / (sigma * Ls * Lr * Lr);
	s.params["Tr"] = Tr;
	s.params["sigma"] = sigma;
	s.params["K"] = K;
	s.params["gamma"] = gamma;

	s.n_u = 2;
	s.B.assign(10, 0.0);
	s.B[0 * 2 + 0] = 1.0 / (sigma * Ls);
	s.B[1 * 2 + 1] = 1.0 / (sigma * Ls);

	const double amp = param(p, "u_amplitude");
	const double omega = 2.0 * std::numbers::pi * param(p, "u_frequency") * param(p, "u_scale");
	s.input = [amp, omega](double t, std::span<double> u) {
		u[0] = amp * std::sin(omega * t);
		u[1] = amp * std::cos(omega * t);
	};

	const double k_tr = K / Tr, kp = K * np, m_tr = M / Tr, inv_tr = 1.0 / Tr;
	const double torque = np * M / (J * Lr), load = TL / J;
	attach_drift(s, [=](const auto &x, auto &dx) {
		dx[0] = -gamma * x[0] + k_tr * x[2] + kp * (x[4] * x[3]);
		dx[1] = -gamma * x[1] - kp * (x[4] * x[2]) + k_tr * x[3];
		dx[2] = m_tr * x[0] - inv_tr * x[2] - np * (x[4] * x[3]);
		dx[3] = m_tr * x[1] + np * (x[4] * x[2]) - inv_tr * x[3];
		dx[4] = torque * (x[2] * x[1] - x[3] * x[0]) - load;
	});
	return s;
}

SystemModel academic_ex3(const ParamMap &)
{
	SystemModel s;
	s.name = "academic_ex3";
	s.n_x = 2;
	s.m = 1;
	s.C = select_first(1, 2);
	s.x0 = {1.0, 0.5};
	s.xhat0 = {0.0, 0.0};
	no_input(s);
	attach_drift(s, [](const auto &x, auto &dx) {
		const auto r = sqrt(x[0] * x[0] + 1.0);
		dx[0] = x[1] * r;
		dx[1] = -(x[0] / r) * (x[1] * x[1]);
	});
	return s;
}

SystemModel academic_ex4(const ParamMap &)
{
	SystemModel s;
	s.name = "academic_ex4";
	s.n_x = 2;
	s.m = 1;
	s.C = select_first(1, 2);
	s.x0 = {1.0, 0.5};
	s.xhat0 = {0.0, 0.0};
	no_input(s);
	attach_drift(s, [](const auto &x, auto &dx) {
		const auto r = sqrt(x[1] * x[1] + 1.0);
		dx[0] = x[1] * r;
		dx[1] = -(x[0] / r) * (x[1] * x[1]);
	});
	return s;
}

SystemModel rigid_body(const ParamMap &p)
{
	SystemModel s;
	s.name = "rigid_body";
	s.n_x = 3;
	s.m = 1;
	s.params = p;
	s.C = select_first(1, 3);
	s.x0 = {1.0, 0.5, -0.5};
	s.xhat0 = {1.0, 0.0, 0.0};
	no_input(s);
	const double I1 = param(p, "I1"), I2 = param(p, "I2"), I3 = param(p, "I3");
	const double a1 = (I2 - I3) / I1, a2 = (I3 - I1) / I2, a3 = (I1 - I2) / I3;
	s.params["a1"] = a1;
	s.params["a2"] = a2;
	s.params["a3"] = a3;
	attach_drift(s, [=](const auto &x, auto &dx) {
		dx[0] = a1 * (x[1] * x[2]);
		dx[1] = a2 * (x[0] * x[2]);
		dx[2] = a3 * (x[0] * x[1]);
	});
	return s;
}

struct Entry {
	std::string name;
	ParamMap defaults;
	SystemModel (*build)(const ParamMap &);
};

const std::vector<Entry> &entries()
{
	static const std::vector<Entry> e = {
	    {"reverse_duffing", {}, reverse_duffing},
	    {"induction_motor",
	     {{"Rs", 0.18}, {"Rr", 0.15}, {"M", 0.068}, {"Ls", 0.0699}, {"Lr", 0.0699},
	      {"J", 0.0586}, {"TL", 10.0}, {"p", 1.0},
	      {"u_amplitude", 220.0}, {"u_frequency", 50.0}, {"u_scale", 1.0}},
	     induction_motor},
	    {"harmonic_oscillator", {}, harmonic_oscillator},
	    {"academic_ex3", {}, academic_ex3},
	    {"academic_ex4", {}, academic_ex4},
	    {"rigid_body", {{"I1", 3.0}, {"I2", 2.0}, {"I3", 1.0}}, rigid_body},
	};
	return e;
}

}  // namespace

void SystemModel::validate() const
{
	if (substeps == 0) {
		throw ContractError(name + ": substeps must be >= 1");
	}
	if (n_x == 0 || m == 0 || m > n_x) {
		throw ContractError(name + ": need 1 <= m <= n_x");
	}
	if (C.size() != m * n_x || B.size() != n_x * n_u || x0.size() != n_x ||
	    xhat0.size() != n_x) {
		throw ContractError(name + ": inconsistent dimensions");
	}
	// Row rank of C by Gaussian elimination with partial pivoting.
	std::vector<double> a = C;
	std::size_t rank = 0;
	for (std::size_t col = 0; col < n_x && rank < m; ++col) {
		std::size_t piv = rank;
		for (std::size_t r = rank; r < m; ++r) {
			if (std::abs(a[r * n_x + col]) > std::abs(a[piv * n_x + col])) piv = r;
		}
		if (std::abs(a[piv * n_x + col]) < 1e-12) continue;
		for (std::size_t c = 0; c < n_x; ++c) std::swap(a[rank * n_x + c], a[piv * n_x + c]);
		for (std::size_t r = rank + 1; r < m; ++r) {
			const double f = a[r * n_x + col] / a[rank * n_x + col];
			for (std::size_t c = 0; c < n_x; ++c) a[r * n_x + c] -= f * a[rank * n_x + c];
		}
		++rank;
	}
	if (rank != m) {
		throw ContractError(name + ": output matrix C is rank deficient");
	}
	std::vector<double> dx(n_x);
	drift(x0, 0.0, dx);
	for (double v : dx) {
		if (!std::isfinite(v)) {
			throw ContractError(name + ": f(x0, 0) is not finite");
		}
	}
}

void forcing(const SystemModel &sys, double t, std::span<double> out)
{
	std::array<double, max_states> u{};
	sys.input(t, std::span<double>(u.data(), sys.n_u));
	for (std::size_t i = 0; i < sys.n_x; ++i) {
		double acc = 0.0;
		for (std::size_t k = 0; k < sys.n_u; ++k) {
			acc += sys.B[i * sys.n_u + k] * u[k];
		}
		out[i] = acc;
	}
}

void dynamics(const SystemModel &sys, std::span<const double> x, double t,
              std::span<double> out)
{
	if (x.size() != sys.n_x) {
		throw ContractError("dynamics: state has wrong length");
	}
	sys.drift(x, t, out);
	std::array<double, max_states> bu{};
	std::span<double> forced(bu.data(), sys.n_x);
	forcing(sys, t, forced);
	for (std::size_t i = 0; i < sys.n_x; ++i) {
		out[i] += forced[i];
		if (!std::isfinite(out[i])) {
			throw NumericalError(sys.name + ": non-finite state derivative at t=" +
			                     std::to_string(t));
		}
	}
}

std::vector<double> dynamics(const SystemModel &sys, std::span<const double> x, double t)
{
	std::vector<double> out(sys.n_x);
	dynamics(sys, x, t, out);
	return out;
}

void output(const SystemModel &sys, std::span<const double> x, std::span<double> y)
{
	for (std::size_t i = 0; i < sys.m; ++i) {
		double acc = 0.0;
		for (std::size_t j = 0; j < sys.n_x; ++j) {
			acc += sys.C[i * sys.n_x + j] * x[j];
		}
		y[i] = acc;
	}
}

std::vector<double> output(const SystemModel &sys, std::span<const double> x)
{
	if (x.size() != sys.n_x) {
		throw ContractError("output: state has wrong length");
	}
	std::vector<double> y(sys.m);
	output(sys, x, y);
	return y;
}

const std::vector<std::string> &system_names()
{
	static const std::vector<std::string> names = [] {
		std::vector<std::string> n;
		for (const auto &e : entries()) n.push_back(e.name);
		return n;
	}();
	return names;
}

SystemModel make_system(const std::string &name, const ParamMap &overrides)
{
	for (const auto &e : entries()) {
		if (e.name != name) continue;
		ParamMap p = e.defaults;
		for (const auto &[k, v] : overrides) {
			if (!p.contains(k)) {
				throw ContractError(name + ": unknown parameter '" + k + "'");
			}
			p[k] = v;
		}
		SystemModel s = e.build(p);
		for (const auto &[k, v] : p) s.params.emplace(k, v);
		s.validate();
		return s;
	}
	throw ContractError("unknown system '" + name + "'");
}

std::vector<SystemModel> registry()
{
	std::vector<SystemModel> all;
	for (const auto &n : system_names()) all.push_back(make_system(n));
	return all;
}

}  // namespace pinnobs
