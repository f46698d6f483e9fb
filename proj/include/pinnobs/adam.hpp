#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pinnobs {

/// Adam moments and step counter. Hyperparameters follow Kingma & Ba.
struct AdamState {
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
	std::vector<double> m;
	std::vector<double> v;
	std::uint64_t step = 0;

	explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/**
 * One bias-corrected Adam update in place. Throws ContractError on a shape
 * mismatch and NumericalError on a non-finite gradient (state untouched).
 */
void adam_step(std::span<double> params, std::span<const double> grads, AdamState &state,
               double lr);

}  // namespace pinnobs
