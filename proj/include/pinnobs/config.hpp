#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pinnobs/errors.hpp"
#include "pinnobs/network.hpp"
#include "pinnobs/systems.hpp"
#include "pinnobs/trainer.hpp"

namespace pinnobs {

/**
 * Flat `[section]` / `key = value` text. `#` and `;` start comments.
 * Keys are stored as "section.key".
 */
class KeyValueFile {
public:
	static KeyValueFile parse(const std::string &text, const std::string &origin = "<string>");
	static KeyValueFile load(const std::filesystem::path &path);

	bool has(const std::string &key) const { return m_values.contains(key); }
	const std::string &get(const std::string &key) const;
	void set(const std::string &key, std::string value) { m_values[key] = std::move(value); }
	const std::map<std::string, std::string> &values() const { return m_values; }

private:
	std::map<std::string, std::string> m_values;
};

/// One training + replay experiment, fully resolved (defaults filled in).
struct ExperimentConfig {
	std::string system = "reverse_duffing";
	ParamMap system_params;
	std::vector<double> x0;     ///< empty: system default
	std::vector<double> xhat0;  ///< empty: system default
	std::optional<double> horizon;
	std::optional<double> dt;
	std::optional<std::size_t> substeps;

	std::size_t hidden_layers = 9;
	std::size_t neurons = 20;
	Activation activation = Activation::tanh;

	double lr = 1e-3;
	std::size_t max_iters = 200'000;
	std::size_t patience = 20'000;
	LossWeights weights;
	std::uint64_t seed = 42;
	std::optional<std::uint64_t> split_seed;
	CollocationSpec collocation;
	Mse0Mode mse0_mode = Mse0Mode::squared;
	double improvement_tol = 1e-12;
	int threads = 0;
	std::size_t log_interval = 100;

	std::filesystem::path output_dir = "out";
	std::optional<std::filesystem::path> checkpoint;

	/// Parses and validates. Throws ConfigError naming the offending key.
	static ExperimentConfig from_file(const KeyValueFile &kv);
	static ExperimentConfig load(const std::filesystem::path &path);

	/// Throws ConfigError on any invalid field.
	void validate() const;

	/// The registered system with overrides applied (x0, xhat0, T, dt too).
	SystemModel make_system_model() const;
	TrainConfig train_config(const SystemModel &sys) const;
	std::uint64_t effective_split_seed() const { return split_seed.value_or(seed); }

	/// Re-parseable text with every field written out.
	std::string to_text(const SystemModel &sys) const;
};

/// Applies the recognised keys of `kv` on top of `cfg`; unknown keys throw.
void apply_overrides(ExperimentConfig &cfg, const KeyValueFile &kv);

}  // namespace pinnobs
