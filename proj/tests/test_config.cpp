#include <gtest/gtest.h>

#include "pinnobs/config.hpp"

using namespace pinnobs;

namespace {

std::string field_of(const std::string &text)
{
	try {
		auto cfg = ExperimentConfig::from_file(KeyValueFile::parse(text));
		cfg.validate();
		cfg.make_system_model();
	} catch (const ConfigError &e) {
		return e.field();
	}
	return "";
}

}  // namespace

TEST(KeyValueFile, SectionsAndComments)
{
	const auto kv = KeyValueFile::parse(
	    "top = 1\n"
	    "# comment\n"
	    "[training]\n"
	    "  lr = 0.5   ; trailing\n"
	    "\n"
	    "[system]\n"
	    "x0 = 1, 2\n");
	EXPECT_EQ(kv.get("top"), "1");
	EXPECT_EQ(kv.get("training.lr"), "0.5");
	EXPECT_EQ(kv.get("system.x0"), "1, 2");
	EXPECT_FALSE(kv.has("lr"));
	EXPECT_THROW(kv.get("training.seed"), ConfigError);
}

TEST(KeyValueFile, SyntaxErrors)
{
	EXPECT_THROW(KeyValueFile::parse("[open\n"), ConfigError);
	EXPECT_THROW(KeyValueFile::parse("no equals sign\n"), ConfigError);
	EXPECT_THROW(KeyValueFile::parse(" = 3\n"), ConfigError);
	EXPECT_THROW(KeyValueFile::load("/nonexistent/pinnobs.cfg"), IoError);
}

TEST(ExperimentConfig, Defaults)
{
	const ExperimentConfig c;
	EXPECT_EQ(c.system, "reverse_duffing");
	EXPECT_EQ(c.hidden_layers, 9u);
	EXPECT_EQ(c.neurons, 20u);
	EXPECT_EQ(c.activation, Activation::tanh);
	EXPECT_EQ(c.lr, 1e-3);
	EXPECT_EQ(c.max_iters, 200000u);
	EXPECT_EQ(c.patience, 20000u);
	EXPECT_EQ(c.weights.w0, 1.0);
	EXPECT_EQ(c.weights.w_ode, 1.0);
	EXPECT_EQ(c.weights.w_y, 1.0);
	EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfig, InvalidFieldsAreNamed)
{
	EXPECT_EQ(field_of("[training]\nlr = -1\n"), "training.lr");
	EXPECT_EQ(field_of("[training]\nlr = fast\n"), "training.lr");
	EXPECT_EQ(field_of("[training]\nmax_iters = 0\n"), "training.max_iters");
	EXPECT_EQ(field_of("[training]\nw_ode = -0.5\n"), "training.w_ode");
	EXPECT_EQ(field_of("[training]\nmse0 = cubed\n"), "training.mse0");
	EXPECT_EQ(field_of("[training]\nfancy = 1\n"), "training.fancy");
	EXPECT_EQ(field_of("[system]\nname = lorenz\n"), "system.name");
	EXPECT_EQ(field_of("[system]\ndt = 0\n"), "system.dt");
	EXPECT_EQ(field_of("[system]\nx0 = 1, 2, 3\n"), "system.x0");
	EXPECT_EQ(field_of("[system]\nparam.zeta = 2\n"), "system.param");
	EXPECT_EQ(field_of("[network]\nactivation = gelu\n"), "network.activation");
	EXPECT_EQ(field_of("[network]\nneurons = 0\n"), "network.neurons");
	EXPECT_EQ(field_of("[system]\nsubsteps = 0\n"), "system.substeps");
	EXPECT_EQ(field_of("[training]\nlr = 0.01\n"), "");
}

TEST(ExperimentConfig, SystemOverrides)
{
	const auto c = ExperimentConfig::from_file(KeyValueFile::parse(
	    "[system]\nname = induction_motor\nparam.u_amplitude = 0\nx0 = 1, 1, 1, 1, 1\n"
	    "horizon = 2\ndt = 1e-3\nsubsteps = 8\n"));
	const auto s = c.make_system_model();
	EXPECT_EQ(s.params.at("u_amplitude"), 0.0);
	EXPECT_EQ(s.x0, std::vector<double>(5, 1.0));
	EXPECT_EQ(s.horizon, 2.0);
	EXPECT_EQ(s.dt, 1e-3);
	EXPECT_EQ(s.substeps, 8u);
}

TEST(ExperimentConfig, TrainConfigMapping)
{
	auto c = ExperimentConfig::from_file(KeyValueFile::parse(
	    "[network]\nhidden_layers = 3\nneurons = 7\nactivation = sine\n"
	    "[training]\nmax_iters = 50\npatience = 20000\nw0 = 2\nmse0 = norm\n"
	    "collocation = uniform\ncollocation_points = 99\n"));
	const auto s = c.make_system_model();
	const auto t = c.train_config(s);
	EXPECT_EQ(t.spec, LayerSpec::observer(2, 1, 3, 7, Activation::sine));
	EXPECT_EQ(t.max_iters, 50u);
	EXPECT_EQ(t.patience, 50u);
	EXPECT_EQ(t.weights.w0, 2.0);
	EXPECT_EQ(t.mse0_mode, Mse0Mode::norm);
	EXPECT_EQ(t.collocation.kind, CollocationSpec::Kind::uniform);
	EXPECT_EQ(t.collocation.count, 99u);
	EXPECT_NO_THROW(t.validate());
}

TEST(ExperimentConfig, SplitSeedFollowsSeed)
{
	ExperimentConfig c;
	c.seed = 7;
	EXPECT_EQ(c.effective_split_seed(), 7u);
	c.split_seed = 3;
	EXPECT_EQ(c.effective_split_seed(), 3u);
}

TEST(ExperimentConfig, ManifestReparsesToSameConfig)
{
	auto c = ExperimentConfig::from_file(KeyValueFile::parse(
	    "[system]\nname = harmonic_oscillator\nx0 = 0, 1, 3\n"
	    "[training]\nlr = 0.0025\nseed = 9\nw_y = 1.5\n[output]\ndir = somewhere\n"));
	const auto s = c.make_system_model();
	const std::string text = c.to_text(s);
	const auto back = ExperimentConfig::from_file(KeyValueFile::parse(text));
	EXPECT_EQ(back.to_text(back.make_system_model()), text);
	EXPECT_NE(text.find("hidden_layers = 9"), std::string::npos);
	EXPECT_NE(text.find("lr = 0.0025"), std::string::npos);
	EXPECT_NE(text.find("x0 = 0, 1, 3"), std::string::npos);
	EXPECT_NE(text.find("xhat0 = 0, 1, -1"), std::string::npos);
}
