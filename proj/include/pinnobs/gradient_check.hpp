#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pinnobs/errors.hpp"
#include "pinnobs/tape.hpp"

namespace pinnobs {

/**
 * Compares the tape gradient of `f` at `point` against central finite
 * differences with the given step. `f` must be callable both as
 * `double f(std::span<const double>)` and as `Var f(Tape &, std::span<const Var>)`.
 *
 * Returns max_i |analytic_i - fd_i| / max(1, |analytic_i|).
 */
template <typename F>
double check_gradient(F &&f, std::span<const double> point, double step)
{
	if (!(step > 0.0)) {
		throw ContractError("check_gradient: step must be positive");
	}

	Tape tape;
	std::vector<Var> vars;
	vars.reserve(point.size());
	for (double p : point) {
		vars.push_back(tape.variable(p));
	}
	const Var out = f(tape, std::span<const Var>(vars));
	const std::vector<double> analytic = grad(out, vars);

	std::vector<double> probe(point.begin(), point.end());
	double worst = 0.0;
	for (std::size_t i = 0; i < probe.size(); ++i) {
		const double saved = probe[i];
		probe[i] = saved + step;
		const double up = f(std::span<const double>(probe));
		probe[i] = saved - step;
		const double down = f(std::span<const double>(probe));
		probe[i] = saved;
		if (!std::isfinite(up) || !std::isfinite(down)) {
			throw NumericalError("check_gradient: non-finite value near coordinate " +
			                     std::to_string(i));
		}
		const double fd = (up - down) / (2.0 * step);
		const double err =
		    std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
		worst = std::max(worst, err);
	}
	return worst;
}

}  // namespace pinnobs
