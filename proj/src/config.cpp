#include "pinnobs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pinnobs/evaluator.hpp"

namespace pinnobs {

namespace {

std::string trim(const std::string &s)
{
	const auto b = s.find_first_not_of(" \t\r");
	if (b == std::string::npos) return {};
	const auto e = s.find_last_not_of(" \t\r");
	return s.substr(b, e - b + 1);
}

double to_real(const std::string &key, const std::string &v)
{
	char *end = nullptr;
	const double d = std::strtod(v.c_str(), &end);
	if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
		throw ConfigError(key, "expected a finite number, got '" + v + "'");
	}
	return d;
}

std::uint64_t to_uint(const std::string &key, const std::string &v)
{
	if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
		double d = 0.0;
		try {
			d = to_real(key, v);
		} catch (const ConfigError &) {
			throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
		}
		if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
			throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
		}
		return static_cast<std::uint64_t>(d);
	}
	return std::stoull(v);
}

std::vector<double> to_vector(const std::string &key, const std::string &v)
{
	std::vector<double> out;
	std::string item;
	std::istringstream is(v);
	while (std::getline(is, item, ',')) {
		out.push_back(to_real(key, trim(item)));
	}
	return out;
}

std::string join(const std::vector<double> &v)
{
	std::string s;
	for (std::size_t i = 0; i < v.size(); ++i) {
		if (i) s += ", ";
		s += format_double(v[i]);
	}
	return s;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string &text, const std::string &origin)
{
	KeyValueFile f;
	std::istringstream is(text);
	std::string line, section;
	std::size_t lineno = 0;
	while (std::getline(is, line)) {
		++lineno;
		const auto hash = line.find_first_of("#;");
		if (hash != std::string::npos) line.erase(hash);
		line = trim(line);
		if (line.empty()) continue;
		if (line.front() == '[') {
			if (line.back() != ']') {
				throw ConfigError(origin + ":" + std::to_string(lineno), "unterminated section");
			}
			section = trim(line.substr(1, line.size() - 2));
			continue;
		}
		const auto eq = line.find('=');
		if (eq == std::string::npos) {
			throw ConfigError(origin + ":" + std::to_string(lineno), "expected key = value");
		}
		const std::string key = trim(line.substr(0, eq));
		if (key.empty()) {
			throw ConfigError(origin + ":" + std::to_string(lineno), "empty key");
		}
		f.m_values[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
	}
	return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path &path)
{
	std::ifstream is(path);
	if (!is) {
		throw IoError("cannot read config " + path.string());
	}
	std::ostringstream ss;
	ss << is.rdbuf();
	return parse(ss.str(), path.string());
}

const std::string &KeyValueFile::get(const std::string &key) const
{
	const auto it = m_values.find(key);
	if (it == m_values.end()) {
		throw ConfigError(key, "missing");
	}
	return it->second;
}

void apply_overrides(ExperimentConfig &c, const KeyValueFile &kv)
{
	for (const auto &[key, v] : kv.values()) {
		if (key == "system.name") c.system = v;
		else if (key.starts_with("system.param.")) c.system_params[key.substr(13)] = to_real(key, v);
		else if (key == "system.x0") c.x0 = to_vector(key, v);
		else if (key == "system.xhat0") c.xhat0 = to_vector(key, v);
		else if (key == "system.horizon") c.horizon = to_real(key, v);
		else if (key == "system.dt") c.dt = to_real(key, v);
		else if (key == "system.substeps") c.substeps = to_uint(key, v);
		else if (key == "network.hidden_layers") c.hidden_layers = to_uint(key, v);
		else if (key == "network.neurons") c.neurons = to_uint(key, v);
		else if (key == "network.activation") {
			try {
				c.activation = parse_activation(v);
			} catch (const ContractError &) {
				throw ConfigError(key, "unknown activation '" + v + "'");
			}
		}
		else if (key == "training.lr") c.lr = to_real(key, v);
		else if (key == "training.max_iters") c.max_iters = to_uint(key, v);
		else if (key == "training.patience") c.patience = to_uint(key, v);
		else if (key == "training.w0") c.weights.w0 = to_real(key, v);
		else if (key == "training.w_ode") c.weights.w_ode = to_real(key, v);
		else if (key == "training.w_y") c.weights.w_y = to_real(key, v);
		else if (key == "training.seed") c.seed = to_uint(key, v);
		else if (key == "training.split_seed") c.split_seed = to_uint(key, v);
		else if (key == "training.mse0") {
			if (v == "squared") c.mse0_mode = Mse0Mode::squared;
			else if (v == "norm") c.mse0_mode = Mse0Mode::norm;
			else throw ConfigError(key, "expected 'squared' or 'norm'");
		}
		else if (key == "training.collocation") {
			if (v == "train") c.collocation.kind = CollocationSpec::Kind::train;
			else if (v == "uniform") c.collocation.kind = CollocationSpec::Kind::uniform;
			else throw ConfigError(key, "expected 'train' or 'uniform'");
		}
		else if (key == "training.collocation_points") c.collocation.count = to_uint(key, v);
		else if (key == "training.improvement_tol") c.improvement_tol = to_real(key, v);
		else if (key == "training.threads") c.threads = static_cast<int>(to_uint(key, v));
		else if (key == "training.log_interval") c.log_interval = to_uint(key, v);
		else if (key == "output.dir") c.output_dir = v;
		else if (key == "output.checkpoint") c.checkpoint = std::filesystem::path(v);
		else throw ConfigError(key, "unknown key");
	}
}

ExperimentConfig ExperimentConfig::from_file(const KeyValueFile &kv)
{
	ExperimentConfig c;
	apply_overrides(c, kv);
	c.validate();
	return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path)
{
	return from_file(KeyValueFile::load(path));
}

void ExperimentConfig::validate() const
{
	const auto &names = system_names();
	if (std::find(names.begin(), names.end(), system) == names.end()) {
		throw ConfigError("system.name", "unknown system '" + system + "'");
	}
	if (horizon && !(*horizon >= 0.0)) throw ConfigError("system.horizon", "must be >= 0");
	if (dt && !(*dt > 0.0)) throw ConfigError("system.dt", "must be > 0");
	if (substeps && *substeps == 0) throw ConfigError("system.substeps", "must be >= 1");
	if (hidden_layers == 0) throw ConfigError("network.hidden_layers", "must be >= 1");
	if (neurons == 0) throw ConfigError("network.neurons", "must be >= 1");
	if (!(lr > 0.0)) throw ConfigError("training.lr", "must be > 0");
	if (max_iters == 0) throw ConfigError("training.max_iters", "must be >= 1");
	if (!(weights.w0 >= 0.0)) throw ConfigError("training.w0", "must be >= 0");
	if (!(weights.w_ode >= 0.0)) throw ConfigError("training.w_ode", "must be >= 0");
	if (!(weights.w_y >= 0.0)) throw ConfigError("training.w_y", "must be >= 0");
	if (collocation.kind == CollocationSpec::Kind::uniform && collocation.count == 0) {
		throw ConfigError("training.collocation_points", "must be >= 1 for uniform collocation");
	}
	if (!(improvement_tol >= 0.0)) throw ConfigError("training.improvement_tol", "must be >= 0");
	if (log_interval == 0) throw ConfigError("training.log_interval", "must be >= 1");
	if (output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
}

SystemModel ExperimentConfig::make_system_model() const
{
	SystemModel sys;
	try {
		sys = make_system(system, system_params);
	} catch (const ContractError &e) {
		throw ConfigError("system.param", e.what());
	}
	if (!x0.empty()) {
		if (x0.size() != sys.n_x) throw ConfigError("system.x0", "expected " + std::to_string(sys.n_x) + " values");
		sys.x0 = x0;
	}
	if (!xhat0.empty()) {
		if (xhat0.size() != sys.n_x) throw ConfigError("system.xhat0", "expected " + std::to_string(sys.n_x) + " values");
		sys.xhat0 = xhat0;
	}
	if (horizon) sys.horizon = *horizon;
	if (dt) sys.dt = *dt;
	if (substeps) sys.substeps = *substeps;
	return sys;
}

TrainConfig ExperimentConfig::train_config(const SystemModel &sys) const
{
	TrainConfig t;
	t.spec = LayerSpec::observer(sys.n_x, sys.m, hidden_layers, neurons, activation);
	t.lr = lr;
	t.max_iters = max_iters;
	t.patience = std::min(patience, max_iters);
	t.weights = weights;
	t.seed = seed;
	t.collocation = collocation;
	t.mse0_mode = mse0_mode;
	t.improvement_tol = improvement_tol;
	t.threads = threads;
	return t;
}

std::string ExperimentConfig::to_text(const SystemModel &sys) const
{
	std::ostringstream os;
	os << "[system]\n";
	os << "name = " << system << '\n';
	for (const auto &[k, v] : system_params) os << "param." << k << " = " << format_double(v) << '\n';
	os << "x0 = " << join(sys.x0) << '\n';
	os << "xhat0 = " << join(sys.xhat0) << '\n';
	os << "horizon = " << format_double(sys.horizon) << '\n';
	os << "dt = " << format_double(sys.dt) << '\n';
	os << "substeps = " << sys.substeps << '\n';
	os << "\n[network]\n";
	os << "hidden_layers = " << hidden_layers << '\n';
	os << "neurons = " << neurons << '\n';
	os << "activation = " << to_string(activation) << '\n';
	os << "\n[training]\n";
	os << "lr = " << format_double(lr) << '\n';
	os << "max_iters = " << max_iters << '\n';
	os << "patience = " << patience << '\n';
	os << "w0 = " << format_double(weights.w0) << '\n';
	os << "w_ode = " << format_double(weights.w_ode) << '\n';
	os << "w_y = " << format_double(weights.w_y) << '\n';
	os << "seed = " << seed << '\n';
	os << "split_seed = " << effective_split_seed() << '\n';
	os << "mse0 = " << (mse0_mode == Mse0Mode::squared ? "squared" : "norm") << '\n';
	os << "collocation = "
	   << (collocation.kind == CollocationSpec::Kind::train ? "train" : "uniform") << '\n';
	if (collocation.kind == CollocationSpec::Kind::uniform) {
		os << "collocation_points = " << collocation.count << '\n';
	}
	os << "improvement_tol = " << format_double(improvement_tol) << '\n';
	os << "threads = " << threads << '\n';
	os << "log_interval = " << log_interval << '\n';
	os << "\n[output]\n";
	os << "dir = " << output_dir.string() << '\n';
	if (checkpoint) os << "checkpoint = " << checkpoint->string() << '\n';
	return os.str();
}

}  // namespace pinnobs
