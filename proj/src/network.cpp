#include "pinnobs/network.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "pinnobs/rng.hpp"

namespace pinnobs {

Activation parse_activation(std::string_view name)
{
	if (name == "tanh") return Activation::tanh;
	if (name == "relu") return Activation::relu;
	if (name == "sigmoid") return Activation::sigmoid;
	if (name == "sine" || name == "sin") return Activation::sine;
	throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a)
{
	switch (a) {
	case Activation::tanh: return "tanh";
	case Activation::relu: return "relu";
	case Activation::sigmoid: return "sigmoid";
	case Activation::sine: return "sine";
	}
	return "?";
}

LayerSpec LayerSpec::observer(std::size_t n_x, std::size_t m,
                              std::size_t hidden_layers, std::size_t neurons,
                              Activation activation)
{
	LayerSpec s;
	s.activation = activation;
	s.widths.push_back(1);
	for (std::size_t i = 0; i < hidden_layers; ++i) {
		s.widths.push_back(neurons);
	}
	s.widths.push_back(n_x + n_x * m);
	return s;
}

std::size_t LayerSpec::parameter_count() const
{
	std::size_t n = 0;
	for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
		n += widths[j + 1] * (widths[j] + 1);
	}
	return n;
}

void LayerSpec::validate() const
{
	if (widths.size() < 2) {
		throw ContractError("layer spec needs at least an input and an output layer");
	}
	for (std::size_t w : widths) {
		if (w == 0) {
			throw ContractError("layer spec contains a zero-width layer");
		}
	}
	if (widths.front() != 1) {
		throw ContractError("network input must be the scalar time (l0 = 1)");
	}
}

NetworkParams::NetworkParams(LayerSpec spec, std::uint64_t seed)
    : m_spec(std::move(spec)), m_seed(seed)
{
	m_spec.validate();
	m_values.assign(m_spec.parameter_count(), 0.0);
	std::size_t off = 0;
	for (std::size_t j = 0; j < m_spec.layer_count(); ++j) {
		m_offsets.push_back(off);
		off += m_spec.widths[j + 1] * (m_spec.widths[j] + 1);
	}
}

std::size_t NetworkParams::bias_offset(std::size_t layer) const
{
	return m_offsets[layer] + m_spec.widths[layer + 1] * m_spec.widths[layer];
}

double &NetworkParams::weight(std::size_t layer, std::size_t row, std::size_t col)
{
	return m_values[m_offsets[layer] + row * m_spec.widths[layer] + col];
}

double NetworkParams::weight(std::size_t layer, std::size_t row, std::size_t col) const
{
	return m_values[m_offsets[layer] + row * m_spec.widths[layer] + col];
}

double &NetworkParams::bias(std::size_t layer, std::size_t row)
{
	return m_values[bias_offset(layer) + row];
}

double NetworkParams::bias(std::size_t layer, std::size_t row) const
{
	return m_values[bias_offset(layer) + row];
}

GainMatrix GainMatrix::reshape(std::span<const double> coeffs, std::size_t rows,
                               std::size_t cols)
{
	if (coeffs.size() != rows * cols) {
		throw ContractError("gain reshape: expected " + std::to_string(rows * cols) +
		                    " coefficients, got " + std::to_string(coeffs.size()));
	}
	GainMatrix g(rows, cols);
	std::copy(coeffs.begin(), coeffs.end(), g.m_entries.begin());
	return g;
}

NetworkParams init_params(const LayerSpec &spec, std::uint64_t seed)
{
	NetworkParams p(spec, seed);
	SplitMix rng(seed);
	for (std::size_t j = 0; j < spec.layer_count(); ++j) {
		const std::size_t n_in = spec.widths[j], n_out = spec.widths[j + 1];
		const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
		for (std::size_t r = 0; r < n_out; ++r) {
			for (std::size_t c = 0; c < n_in; ++c) {
				p.weight(j, r, c) = rng.uniform(-bound, bound);
			}
		}
	}
	return p;
}

void check_heads(const LayerSpec &spec, std::size_t n_x, std::size_t m)
{
	if (spec.output_width() != n_x + n_x * m) {
		throw ContractError("output width " + std::to_string(spec.output_width()) +
		                    " does not match n_x + n_x*m = " +
		                    std::to_string(n_x + n_x * m));
	}
}

std::vector<double> evaluate(const NetworkParams &params, double t)
{
	return evaluate_generic<double, double>(params.spec(), params.flat(), t);
}

ObserverOutput forward(const NetworkParams &params, double t, std::size_t n_x,
                       std::size_t m)
{
	check_heads(params.spec(), n_x, m);
	const std::vector<double> out = evaluate(params, t);
	ObserverOutput r;
	r.state.assign(out.begin(), out.begin() + n_x);
	r.gain = GainMatrix::reshape(std::span(out).subspan(n_x), n_x, m);
	return r;
}

ObserverOutputWithRate forward_with_time_derivative(const NetworkParams &params,
                                                    double t, std::size_t n_x,
                                                    std::size_t m)
{
	check_heads(params.spec(), n_x, m);
	const auto out = evaluate_generic<double, Dual<double>>(
	    params.spec(), params.flat(), Dual<double>::seed(t));
	ObserverOutputWithRate r;
	std::vector<double> gain;
	for (std::size_t i = 0; i < out.size(); ++i) {
		if (i < n_x) {
			r.state.push_back(out[i].value);
			r.state_rate.push_back(out[i].deriv);
		} else {
			gain.push_back(out[i].value);
		}
	}
	r.gain = GainMatrix::reshape(gain, n_x, m);
	return r;
}

std::vector<Var> record_params(Tape &tape, std::span<const double> flat)
{
	std::vector<Var> v;
	v.reserve(flat.size());
	for (double x : flat) {
		v.push_back(tape.variable(x));
	}
	return v;
}

namespace {
constexpr std::string_view checkpoint_magic = "pinn-obs-checkpoint";
constexpr int checkpoint_version = 1;
}  // namespace

void save_checkpoint(const NetworkParams &params, const std::filesystem::path &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) {
		throw IoError("cannot open " + path.string() + " for writing");
	}
	os << checkpoint_magic << ' ' << checkpoint_version << '\n';
	os << "activation " << to_string(params.spec().activation) << '\n';
	os << "seed " << params.seed() << '\n';
	os << "widths";
	for (std::size_t w : params.spec().widths) {
		os << ' ' << w;
	}
	os << '\n';
	char buf[64];
	for (double v : params.flat()) {
		std::snprintf(buf, sizeof buf, "%.17g\n", v);
		os << buf;
	}
	if (!os) {
		throw IoError("write failed: " + path.string());
	}
}

NetworkParams load_checkpoint(const std::filesystem::path &path)
{
	std::ifstream is(path);
	if (!is) {
		throw IoError("cannot open checkpoint " + path.string());
	}
	auto bad = [&](const std::string &why) {
		return IoError("malformed checkpoint " + path.string() + ": " + why);
	};

	std::string magic, key, line;
	int version = 0;
	if (!(is >> magic >> version) || magic != checkpoint_magic) {
		throw bad("missing header");
	}
	if (version != checkpoint_version) {
		throw bad("unsupported version " + std::to_string(version));
	}
	std::string act;
	std::uint64_t seed = 0;
	if (!(is >> key >> act) || key != "activation") throw bad("activation");
	if (!(is >> key >> seed) || key != "seed") throw bad("seed");
	if (!(is >> key) || key != "widths") throw bad("widths");
	std::getline(is, line);
	LayerSpec spec;
	spec.activation = parse_activation(act);
	std::istringstream ws(line);
	for (std::size_t w; ws >> w;) {
		spec.widths.push_back(w);
	}
	NetworkParams p(spec, seed);
	for (double &v : p.flat()) {
		if (!(is >> line)) throw bad("truncated values");
		char *end = nullptr;
		v = std::strtod(line.c_str(), &end);
		if (end != line.c_str() + line.size() || !std::isfinite(v)) {
			throw bad("invalid value '" + line + "'");
		}
	}
	if (is >> line) {
		throw bad("trailing data");
	}
	return p;
}

}  // namespace pinnobs
