#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pinnobs/dual.hpp"
#include "pinnobs/tape.hpp"

namespace pinnobs {

using ParamMap = std::map<std::string, double>;

/**
 * A benchmark plant  x' = f(x, t) + B u(t),  y = C x.
 *
 * The drift f is stored three times, instantiated from one generic
 * definition: on doubles, on tape variables (reference gradients), and as a
 * forward-mode Jacobian (training kernel). Immutable after construction.
 */
struct SystemModel {
	using Drift = std::function<void(std::span<const double>, double, std::span<double>)>;
	using DriftTape = std::function<std::vector<Var>(std::span<const Var>, double)>;
	using Input = std::function<void(double, std::span<double>)>;

	std::string name;
	std::size_t n_x = 0;
	std::size_t m = 0;
	std::size_t n_u = 0;
	std::vector<double> B;  ///< n_x x n_u, row-major
	std::vector<double> C;  ///< m x n_x, row-major
	std::vector<double> x0;
	std::vector<double> xhat0;
	double horizon = 20.0;
	double dt = 2e-3;
	/// RK4 steps per sample interval dt in simulate() and observer replay.
	std::size_t substeps = 1;
	ParamMap params;

	Drift drift;
	DriftTape drift_tape;
	/// Row-major n_x x n_x Jacobian of f with respect to x.
	Drift jacobian;
	Input input;

	/// Throws ContractError if dimensions, rank of C, or f(x0, 0) are invalid.
	void validate() const;
};

/// f(x, t) + B u(t). Throws NumericalError on a non-finite result.
std::vector<double> dynamics(const SystemModel &sys, std::span<const double> x, double t);
void dynamics(const SystemModel &sys, std::span<const double> x, double t,
              std::span<double> out);

/// B u(t), length n_x.
void forcing(const SystemModel &sys, double t, std::span<double> out);

/// C x.
std::vector<double> output(const SystemModel &sys, std::span<const double> x);
void output(const SystemModel &sys, std::span<const double> x, std::span<double> y);

/// Names accepted by make_system, in registry order.
const std::vector<std::string> &system_names();

/**
 * Builds a registered system. `overrides` replaces named constants (for
 * example `I1`, `u_scale`); unknown keys are rejected.
 */
SystemModel make_system(const std::string &name, const ParamMap &overrides = {});

/// All six systems with default constants.
std::vector<SystemModel> registry();

}  // namespace pinnobs
