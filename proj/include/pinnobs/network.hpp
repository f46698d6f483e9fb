#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinnobs/dual.hpp"
#include "pinnobs/errors.hpp"
#include "pinnobs/tape.hpp"

namespace pinnobs {

enum class Activation { tanh, relu, sigmoid, sine };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Layer widths (l0 = 1 time input, ..., lk = n_x + n_x * m) and the hidden
/// activation. The output layer is always affine.
struct LayerSpec {
	std::vector<std::size_t> widths;
	Activation activation = Activation::tanh;

	/// 1 -> hidden_layers x neurons -> n_x + n_x * m.
	static LayerSpec observer(std::size_t n_x, std::size_t m,
	                          std::size_t hidden_layers, std::size_t neurons,
	                          Activation activation = Activation::tanh);

	std::size_t layer_count() const { return widths.empty() ? 0 : widths.size() - 1; }
	std::size_t input_width() const { return widths.front(); }
	std::size_t output_width() const { return widths.back(); }
	std::size_t parameter_count() const;

	/// Throws ContractError on fewer than two layers or a zero width.
	void validate() const;

	bool operator==(const LayerSpec &) const = default;
};

/**
 * All weights and biases, stored contiguously so the optimizer can treat them
 * as one vector. Layer j (1-based in the usual notation, 0-based here)
 * occupies W (widths[j+1] x widths[j], row-major) followed by b (widths[j+1]).
 */
class NetworkParams {
public:
	NetworkParams() = default;
	/// Zero-initialized parameters for `spec`.
	explicit NetworkParams(LayerSpec spec, std::uint64_t seed = 0);

	const LayerSpec &spec() const { return m_spec; }
	std::uint64_t seed() const { return m_seed; }

	std::span<double> flat() { return m_values; }
	std::span<const double> flat() const { return m_values; }
	std::size_t size() const { return m_values.size(); }

	std::size_t weight_offset(std::size_t layer) const { return m_offsets[layer]; }
	std::size_t bias_offset(std::size_t layer) const;

	double &weight(std::size_t layer, std::size_t row, std::size_t col);
	double weight(std::size_t layer, std::size_t row, std::size_t col) const;
	double &bias(std::size_t layer, std::size_t row);
	double bias(std::size_t layer, std::size_t row) const;

	bool operator==(const NetworkParams &) const = default;

private:
	LayerSpec m_spec;
	std::uint64_t m_seed = 0;
	std::vector<double> m_values;
	std::vector<std::size_t> m_offsets;
};

/// Observer gain L(t), n_x x m, filled row-major from the gain head.
class GainMatrix {
public:
	GainMatrix() = default;
	GainMatrix(std::size_t rows, std::size_t cols)
	    : m_rows(rows), m_cols(cols), m_entries(rows * cols, 0.0)
	{
	}

	static GainMatrix reshape(std::span<const double> coeffs, std::size_t rows,
	                          std::size_t cols);

	std::size_t rows() const { return m_rows; }
	std::size_t cols() const { return m_cols; }
	double operator()(std::size_t i, std::size_t j) const { return m_entries[i * m_cols + j]; }
	double &operator()(std::size_t i, std::size_t j) { return m_entries[i * m_cols + j]; }
	const std::vector<double> &flatten() const { return m_entries; }

	bool operator==(const GainMatrix &) const = default;

private:
	std::size_t m_rows = 0, m_cols = 0;
	std::vector<double> m_entries;
};

NetworkParams init_params(const LayerSpec &spec, std::uint64_t seed);

struct ObserverOutput {
	std::vector<double> state;
	GainMatrix gain;
};

struct ObserverOutputWithRate {
	std::vector<double> state;
	std::vector<double> state_rate;
	GainMatrix gain;
};

ObserverOutput forward(const NetworkParams &params, double t, std::size_t n_x,
                       std::size_t m);
ObserverOutputWithRate forward_with_time_derivative(const NetworkParams &params,
                                                    double t, std::size_t n_x,
                                                    std::size_t m);

/// Raw output vector (length widths.back()) of the network at t.
std::vector<double> evaluate(const NetworkParams &params, double t);

/// Checks that the output width equals n_x + n_x * m.
void check_heads(const LayerSpec &spec, std::size_t n_x, std::size_t m);

/**
 * Generic evaluation over any scalar. `W` is the parameter scalar (double or
 * Var), `A` the activation scalar (W, Dual<W>). Values are accumulated in a
 * fixed order, so `double` and `Dual<double>` agree bit-for-bit on values.
 */
template <typename W, typename A>
std::vector<A> evaluate_generic(const LayerSpec &spec, std::span<const W> flat,
                                A input)
{
	std::vector<A> in{input}, out;
	std::size_t off = 0;
	const std::size_t layers = spec.layer_count();
	for (std::size_t j = 0; j < layers; ++j) {
		const std::size_t n_in = spec.widths[j], n_out = spec.widths[j + 1];
		const std::size_t b_off = off + n_in * n_out;
		out.clear();
		out.reserve(n_out);
		for (std::size_t r = 0; r < n_out; ++r) {
			A z = flat[off + r * n_in] * in[0];
			for (std::size_t c = 1; c < n_in; ++c) {
				z = z + flat[off + r * n_in + c] * in[c];
			}
			z = z + flat[b_off + r];
			if (j + 1 < layers) {
				switch (spec.activation) {
				case Activation::tanh: {
					using std::tanh;
					z = tanh(z);
					break;
				}
				case Activation::sine: {
					using std::sin;
					z = sin(z);
					break;
				}
				case Activation::sigmoid:
					z = sigmoid(z);
					break;
				case Activation::relu:
					z = relu(z);
					break;
				}
			}
			out.push_back(z);
		}
		std::swap(in, out);
		off = b_off + n_out;
	}
	return in;
}

inline Var sigmoid(const Var &a) { return 1.0 / (1.0 + exp(-a)); }
inline Var relu(const Var &a) { return a > 0.0 ? a : a * 0.0; }

/// Parameters recorded as tape leaves, in flat order.
std::vector<Var> record_params(Tape &tape, std::span<const double> flat);

/**
 * Checkpoint text format, version 1:
 *
 *     pinn-obs-checkpoint 1
 *     activation <name>
 *     seed <u64>
 *     widths <l0> <l1> ... <lk>
 *     <one value per line, %.17g, flat order>
 *
 * Values round-trip exactly.
 */
void save_checkpoint(const NetworkParams &params, const std::filesystem::path &path);
NetworkParams load_checkpoint(const std::filesystem::path &path);

}  // namespace pinnobs
