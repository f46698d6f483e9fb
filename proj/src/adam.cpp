#include "pinnobs/adam.hpp"

#include <cmath>
#include <string>

#include "pinnobs/errors.hpp"

namespace pinnobs {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state,
               double lr)
{
	if (params.size() != grads.size() || state.m.size() != params.size() ||
	    state.v.size() != params.size()) {
		throw ContractError("adam_step: shape mismatch");
	}
	for (std::size_t i = 0; i < grads.size(); ++i) {
		if (!std::isfinite(grads[i])) {
			throw NumericalError("adam_step: non-finite gradient at index " + std::to_string(i));
		}
	}
	++state.step;
	const double b1 = state.beta1, b2 = state.beta2;
	const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
	const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
	for (std::size_t i = 0; i < params.size(); ++i) {
		const double g = grads[i];
		state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
		state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
		const double mhat = state.m[i] / c1;
		const double vhat = state.v[i] / c2;
		params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
	}
}

}  // namespace pinnobs
