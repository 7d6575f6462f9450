#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "feplab/config.hpp"
#include "oracle.hpp"

using namespace feplab;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = FEPLAB_SOURCE_DIR;

toml::table parse(std::string_view text) { return toml::parse(text); }

const char* kMinimal = R"(
name = "t"
[sim]
duration = 1.0
dt = 0.001
)";

}  // namespace

TEST(VehicleFile, BundledParamsEqualDefaults) {
  const VehicleModel m = load_vehicle_model(kRoot / "params/nominal_missile.toml");
  const VehicleParams p{};
  const AeroCoeffs c{};
  EXPECT_EQ(m.params.mass, p.mass);
  EXPECT_EQ(m.params.inertia_yy, p.inertia_yy);
  EXPECT_EQ(m.params.ref_area, p.ref_area);
  EXPECT_EQ(m.params.diameter, p.diameter);
  EXPECT_EQ(m.params.gravity, p.gravity);
  EXPECT_EQ(m.coeffs.C_Z_alpha, c.C_Z_alpha);
  EXPECT_EQ(m.coeffs.C_Z_delta, c.C_Z_delta);
  EXPECT_EQ(m.coeffs.C_m_0, c.C_m_0);
  EXPECT_EQ(m.coeffs.C_m_alpha, c.C_m_alpha);
  EXPECT_EQ(m.coeffs.C_m_q, c.C_m_q);
  EXPECT_EQ(m.coeffs.C_m_delta, c.C_m_delta);
  EXPECT_EQ(m.condition.V, 914.0);
  EXPECT_EQ(m.condition.rho, 1.225);
  EXPECT_EQ(m.condition.mach, 2.6859);
  EXPECT_NEAR(m.delta_limit, 30 * oracle::deg, 1e-15);
  EXPECT_NEAR(m.rate_limit, 90 * oracle::deg, 1e-15);
}

TEST(VehicleFile, MissingFieldIsAnError) {
  toml::table t = config_detail::parse_file(kRoot / "params/nominal_missile.toml");
  t["aero"].as_table()->erase("C_m_q");
  try {
    vehicle_model_from_toml(t);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("C_m_q"), std::string::npos) << e.what();
  }
}

TEST(VehicleFile, UnknownKeyIsAnError) {
  toml::table t = config_detail::parse_file(kRoot / "params/nominal_missile.toml");
  t["aero"].as_table()->insert("C_m_qq", 1.0);
  EXPECT_THROW(vehicle_model_from_toml(t), ConfigError);
}

TEST(VehicleFile, MissingFileIsAnError) {
  EXPECT_THROW(load_vehicle_model(kRoot / "params/does_not_exist.toml"), ConfigError);
}

TEST(Scenario, MinimalUsesDefaults) {
  const ScenarioConfig c = parse_scenario(kMinimal);
  EXPECT_EQ(c.name, "t");
  EXPECT_EQ(c.mode, ProtectionMode::cbf);
  EXPECT_EQ(c.velocity.kind, VelocityProfile::Kind::constant);
  EXPECT_EQ(c.velocity.V0, 914.0);
  EXPECT_EQ(c.gains.K_alpha, 36.53);
}

TEST(Scenario, DegreesConvertedToRadians) {
  const ScenarioConfig c = parse_scenario(std::string(kMinimal) + R"(
[reference]
type = "sine"
amplitude_deg = 20.0
period = 20.0
[envelope]
alpha_stall_max_deg = 12.0
)");
  EXPECT_NEAR(c.reference.amplitude, 20 * oracle::deg, 1e-15);
  EXPECT_EQ(c.reference.kind, ReferenceSpec::Kind::sine);
  EXPECT_NEAR(c.envelope.alpha_stall_max, 12 * oracle::deg, 1e-15);
}

TEST(Scenario, UnknownKeysAndSectionsRejected) {
  EXPECT_THROW(parse_scenario(std::string(kMinimal) + "[filter]\ngama_1 = 2.0\n"), ConfigError);
  EXPECT_THROW(parse_scenario(std::string(kMinimal) + "[filtr]\ngamma_1 = 2.0\n"), ConfigError);
}

TEST(Scenario, ValidationRejectsBadValues) {
  const std::string base = kMinimal;
  EXPECT_THROW(parse_scenario(base, {"filter.gamma_1=0"}), ConfigError);
  EXPECT_THROW(parse_scenario(base, {"sim.dt=-1"}), ConfigError);
  EXPECT_THROW(parse_scenario(base, {"filter.mode=\"fancy\""}), ConfigError);
  EXPECT_THROW(parse_scenario(base, {"uncertainty.d_C_Z_alpha=-1.0"}), ConfigError);
  EXPECT_THROW(parse_scenario(base, {"envelope.nz_min=5", "envelope.nz_max=1"}), ConfigError);
  EXPECT_THROW(parse_scenario(base, {"filter.dt=0.01"}), ConfigError);
  EXPECT_THROW(parse_scenario("name = \"x\"\n[sim]\nduration = \"long\"\n"), ConfigError);
  EXPECT_THROW(parse_scenario("this is = = not toml"), ConfigError);
}

TEST(Scenario, OverridesApplyAndEcho) {
  const ScenarioConfig c =
      parse_scenario(kMinimal, {"filter.mode=clip", "controller.preset=conservative",
                                "filter.gamma_1=3", "sim.duration=2.5"});
  EXPECT_EQ(c.mode, ProtectionMode::clip);
  EXPECT_EQ(c.gains.K_alpha, 4.0);
  EXPECT_EQ(c.hocbf.gamma_1, 3.0);
  EXPECT_EQ(c.duration, 2.5);
  ASSERT_EQ(c.overrides.size(), 4u);
  EXPECT_EQ(c.overrides[0], "filter.mode=clip");
}

TEST(Scenario, OverrideSyntaxErrors) {
  EXPECT_THROW(parse_scenario(kMinimal, {"novalue"}), ConfigError);
  EXPECT_THROW(parse_scenario(kMinimal, {"=3"}), ConfigError);
  EXPECT_THROW(parse_scenario(kMinimal, {"sim..dt=3"}), ConfigError);
  EXPECT_THROW(parse_scenario(kMinimal, {"name.x=3"}), ConfigError);
}

TEST(Scenario, ApplyOverrideCreatesTables) {
  toml::table t = parse(kMinimal);
  apply_override(t, "disturbance.w_nz=0.3");
  EXPECT_EQ(t["disturbance"]["w_nz"].value<double>(), 0.3);
  apply_override(t, "filter.mode=cbf+clf");
  EXPECT_EQ(t["filter"]["mode"].value<std::string>(), "cbf+clf");
}

TEST(Scenario, CustomGainsMarkController) {
  const ScenarioConfig c = parse_scenario(std::string(kMinimal) + "[controller]\nK_alpha = 10.0\nK_q = 3.0\n");
  EXPECT_EQ(c.gains.K_alpha, 10.0);
  EXPECT_EQ(c.gains.K_q, 3.0);
  EXPECT_EQ(c.controller_label, "custom");
}

TEST(Scenario, RampAndPiecewiseVelocity) {
  ScenarioConfig c = parse_scenario(std::string(kMinimal) +
                                    "[vehicle]\nvelocity = \"ramp\"\nV_start = 100.0\nV_end = 1500.0\n"
                                    "ramp_start = 0.0\nramp_end = 150.0\n");
  EXPECT_EQ(c.velocity.kind, VelocityProfile::Kind::ramp);
  EXPECT_NEAR(velocity_profile(75.0, c.velocity), 800.0, 1e-9);
  c = parse_scenario(std::string(kMinimal) +
                     "[vehicle]\nvelocity = \"piecewise\"\nbreakpoints_t = [0.0, 1.0]\n"
                     "breakpoints_V = [500.0, 600.0]\n");
  EXPECT_EQ(c.velocity.kind, VelocityProfile::Kind::piecewise);
  EXPECT_NEAR(velocity_profile(0.5, c.velocity), 550.0, 1e-9);
  EXPECT_THROW(parse_scenario(std::string(kMinimal) +
                              "[vehicle]\nvelocity = \"piecewise\"\nbreakpoints_t = [1.0, 0.0]\n"
                              "breakpoints_V = [500.0, 600.0]\n"),
               ConfigError);
}

TEST(Scenario, InfiniteLoadLimits) {
  const ScenarioConfig c =
      parse_scenario(std::string(kMinimal) + "[envelope]\nnz_min = -inf\nnz_max = inf\n");
  EXPECT_TRUE(std::isinf(c.envelope.nz_max));
  EXPECT_LT(c.envelope.nz_min, 0.0);
}

TEST(BundledScenarios, AllValidate) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(kRoot / "scenarios")) {
    if (e.path().extension() != ".toml") continue;
    ++n;
    ScenarioConfig c;
    ASSERT_NO_THROW(c = load_scenario(e.path())) << e.path();
    EXPECT_EQ(c.name, e.path().stem().string());
  }
  EXPECT_EQ(n, 5);
}

TEST(BundledScenarios, DisturbanceValues) {
  const ScenarioConfig c = load_scenario(kRoot / "scenarios/disturbance.toml");
  EXPECT_EQ(c.mode, ProtectionMode::cbf_clf);
  EXPECT_NEAR(c.disturbance.w_alpha_dot, 0.3, 1e-6);
  EXPECT_NEAR(c.disturbance.w_q_dot, 0.1, 1e-6);
  EXPECT_EQ(c.disturbance.w_nz, 0.3);
  EXPECT_EQ(c.duration, 10.0);
}

TEST(BundledScenarios, UncertaintyValues) {
  const ScenarioConfig c = load_scenario(kRoot / "scenarios/uncertainty.toml");
  EXPECT_EQ(c.uncertainty.d_C_Z_alpha, -0.40);
  EXPECT_EQ(c.uncertainty.d_C_Z_delta, -0.30);
  EXPECT_EQ(c.uncertainty.d_C_m_q, -0.10);
}

TEST(BundledScenarios, MissingScenarioFile) {
  EXPECT_THROW(load_scenario(kRoot / "scenarios/nope.toml"), ConfigError);
}
