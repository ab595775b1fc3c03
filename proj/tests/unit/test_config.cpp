#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gradtopo/config.hpp"

using namespace gradtopo;

namespace {

const char* kCantilever = R"(
# reference cantilever
[domain]
width = 200
height = 100
traction_x = 0
traction_y = -600

[material]
youngs_modulus = 12500
poisson = 0.25
beta = 0.16666666666666666
gamma_phi = 0.01

[optimizer]
volume_fraction = 0.8
kappa1 = 400
kappa2 = 4000
kappa3 = 1
kappa4 = 1
tau = 1e-6

[stress]
yield_stress = 45
)";

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

bool names(const std::vector<Violation>& v, const std::string& field) {
  for (const auto& x : v) {
    if (x.field == field) return true;
  }
  return false;
}

}  // namespace

TEST(Config, LoadsCantileverFile) {
  const RunConfig c = load_config(write_temp("gradtopo_cantilever.cfg", kCantilever));
  EXPECT_EQ(c.width, 200.0);
  EXPECT_EQ(c.height, 100.0);
  EXPECT_EQ(c.traction.y, -600.0);
  EXPECT_EQ(c.volume_fraction, 0.8);
  EXPECT_EQ(c.youngs_modulus, 12500.0);
  EXPECT_EQ(c.poisson, 0.25);
  EXPECT_EQ(c.yield_stress, 45.0);
  EXPECT_NEAR(c.beta, 1.0 / 6.0, 1e-15);
  EXPECT_EQ(c.gamma_phi, 0.01);
  EXPECT_EQ(c.kappa1, 400.0);
  EXPECT_EQ(c.kappa2, 4000.0);
  EXPECT_EQ(c.kappa3, 1.0);
  EXPECT_EQ(c.kappa4, 1.0);
  EXPECT_EQ(c.tau, 1e-6);
}

TEST(Config, OmittedKeysTakeDefaults) {
  const RunConfig c = load_config(write_temp("gradtopo_cantilever2.cfg", kCantilever));
  EXPECT_EQ(c.pnorm_p, 8);
  EXPECT_EQ(c.traction_len(), 10.0);
  EXPECT_EQ(c.traction_mid(), 50.0);
  EXPECT_EQ(c.gamma_chi_value(), c.gamma_phi);
  EXPECT_TRUE(c.void_regions.empty());
  EXPECT_TRUE(c.solid_regions.empty());
}

TEST(Config, VolumeFractionOutOfRangeIsNamed) {
  const std::string text = std::string(kCantilever) + "\n[optimizer]\nvolume_fraction = 1.2\n";
  try {
    load_config(write_temp("gradtopo_bad_m.cfg", text));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("volume_fraction"), std::string::npos);
  }
}

TEST(Config, ParseErrorsCarryLineNumber) {
  try {
    parse_config("[domain]\nwidth = 1\nnonsense line\n", "x.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("[domain]\nno_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("width = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[domain\n"), ConfigError);
  EXPECT_THROW(parse_config("[domain]\nwidth = abc\n"), ConfigError);
}

TEST(Config, MissingFileThrows) {
  EXPECT_THROW(load_config("/nonexistent/dir/none.cfg"), ConfigError);
}

TEST(Config, ValidCantileverHasNoViolations) {
  EXPECT_TRUE(validate(RunConfig::cantilever()).empty());
}

TEST(Config, BetaZeroViolation) {
  RunConfig c = RunConfig::cantilever();
  c.beta = 0.0;
  const auto v = validate(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "material.beta");
  EXPECT_EQ(v[0].constraint, "beta must be in (0,1]");
}

TEST(Config, OverlappingFixedRegions) {
  RunConfig c = RunConfig::cantilever();
  c.void_regions = {{0, 0, 10, 10}};
  c.solid_regions = {{5, 5, 20, 20}};
  const auto v = validate(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "fixed regions overlap");
  c.solid_regions = {{50, 50, 60, 60}};
  EXPECT_TRUE(validate(c).empty());
}

TEST(Config, EachInvariantIsChecked) {
  const auto broken = [](auto mutate, const std::string& field) {
    RunConfig c = RunConfig::cantilever();
    mutate(c);
    const auto v = validate(c);
    EXPECT_TRUE(names(v, field)) << field;
  };
  broken([](RunConfig& c) { c.volume_fraction = 0.0; }, "optimizer.volume_fraction");
  broken([](RunConfig& c) { c.volume_fraction = 1.0; }, "optimizer.volume_fraction");
  broken([](RunConfig& c) { c.beta = 1.5; }, "material.beta");
  broken([](RunConfig& c) { c.tau = 0.0; }, "optimizer.tau");
  broken([](RunConfig& c) { c.tol = 0.0; }, "optimizer.tol");
  broken([](RunConfig& c) { c.pnorm_p = 1; }, "stress.pnorm_p");
  broken([](RunConfig& c) { c.nx = 0; }, "domain.nx");
  broken([](RunConfig& c) { c.ny = 0; }, "domain.ny");
  broken([](RunConfig& c) { c.width = -1.0; }, "domain.width");
  broken([](RunConfig& c) { c.height = 0.0; }, "domain.height");
  broken([](RunConfig& c) { c.poisson = 0.5; }, "material.poisson");
  broken([](RunConfig& c) { c.kappa2 = -1.0; }, "optimizer.kappa2");
  broken([](RunConfig& c) { c.max_iter = 0; }, "optimizer.max_iter");
}

TEST(Config, InfiniteTolIsValid) {
  RunConfig c = RunConfig::cantilever();
  c.tol = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(validate(c).empty());
  apply_override(c, "optimizer.tol=inf");
  EXPECT_TRUE(std::isinf(c.tol));
}

TEST(Config, SerializeRoundTrip) {
  RunConfig c = RunConfig::cantilever();
  c.kappa2 = 400000.0;
  c.beta = 1.0 / 6.0;
  c.tau = 3.3e-7;
  c.void_regions = {{0.5, 1.25, 3.0, 4.0}};
  c.solid_regions = {{100, 0, 110, 7.125}, {150, 90, 160, 100}};
  c.chi_mode = ChiMode::Graded;
  c.output_directory = "some/dir";
  const RunConfig once = load_config(write_temp("gradtopo_rt.cfg", serialize(c)));
  EXPECT_EQ(once, c);
  const RunConfig twice = load_config(write_temp("gradtopo_rt2.cfg", serialize(once)));
  EXPECT_EQ(twice, once);
  EXPECT_EQ(serialize(twice), serialize(c));
}

TEST(Config, OverridesUseSectionKey) {
  RunConfig c = RunConfig::cantilever();
  apply_override(c, "optimizer.kappa2=40");
  EXPECT_EQ(c.kappa2, 40.0);
  apply_override(c, "material.beta = 1");
  EXPECT_EQ(c.beta, 1.0);
  EXPECT_TRUE(c.chi_tied_to_phi());
  EXPECT_THROW(apply_override(c, "optimizer.kappa2"), ConfigError);
  EXPECT_THROW(apply_override(c, "kappa2=3"), ConfigError);
  EXPECT_THROW(apply_override(c, "optimizer.nope=3"), ConfigError);
}

TEST(Config, KeyTableCoversSerializedKeys) {
  const auto keys = config_keys();
  const std::string text = serialize(RunConfig::cantilever());
  for (const auto& k : keys) {
    const auto dot = k.name.find('.');
    EXPECT_NE(text.find("\n" + k.name.substr(dot + 1) + " = "), std::string::npos) << k.name;
    EXPECT_FALSE(k.description.empty()) << k.name;
  }
  EXPECT_GT(keys.size(), 40u);
}
