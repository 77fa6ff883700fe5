#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>

#include "support/temp_dir.hpp"
#include "tdcosim/common/errors.hpp"
#include "tdcosim/cosim/config.hpp"
#include "tdcosim/cosim/coordinator.hpp"
#include "tdcosim/scenario/experiment.hpp"

using namespace tdcosim;
using namespace tdcosim::cosim;
using testsupport::TempDir;

namespace {

/// Generated once and copied per test; building the high-VI irradiance is
/// the slow part and never changes.
const ScenarioConfig& high_vi_config() {
  static const ScenarioConfig cfg = [] {
    static TempDir dir("cosim-high");
    ScenarioConfig c = load_scenario(scenario::build_experiment("bess-high-tc", 42, dir.str()));
    c.schedule.horizon_s = 60.0;
    c.schedule.dt_transmission_s = 0.01;  // coarse rotor step keeps the suite quick
    return c;
  }();
  return cfg;
}

ScenarioConfig quick_preset(const std::string& name, TempDir& dir, double horizon_s) {
  ScenarioConfig cfg = load_scenario(scenario::build_experiment(name, 1, dir.str()));
  cfg.schedule.horizon_s = horizon_s;
  cfg.schedule.dt_transmission_s = 0.01;
  return cfg;
}

bool same_series(const std::vector<std::vector<double>>& a,
                 const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/// Every field that describes physics; labels are checked separately.
bool same_physics(const metrics::MetricsBundle& a, const metrics::MetricsBundle& b) {
  return a.t_s == b.t_s && same_series(a.freq_hz, b.freq_hz) &&
         same_series(a.tie_dev_mw, b.tie_dev_mw) && same_series(a.ace_mw, b.ace_mw) &&
         same_series(a.ace_b_mw, b.ace_b_mw) && same_series(a.ace_g_mw, b.ace_g_mw) &&
         same_series(a.cmd_conv_mw, b.cmd_conv_mw) && same_series(a.cmd_bess_mw, b.cmd_bess_mw) &&
         a.freq_coi_hz == b.freq_coi_hz && same_series(a.pcc_p_mw, b.pcc_p_mw) &&
         same_series(a.pcc_q_mvar, b.pcc_q_mvar) && same_series(a.feeder_vmin_pu, b.feeder_vmin_pu) &&
         same_series(a.feeder_vmax_pu, b.feeder_vmax_pu) && same_series(a.bess_kw, b.bess_kw) &&
         same_series(a.bess_soc, b.bess_soc);
}

}  // namespace

TEST_CASE("flat scenario stays exactly flat") {
  TempDir dir("cosim-quiet");
  ScenarioConfig cfg = quick_preset("quiescent", dir, 40.0);
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  REQUIRE(b.t_s.size() == 40);
  for (std::size_t k = 0; k < b.t_s.size(); ++k) {
    CHECK(std::abs(b.freq_coi_hz[k]) < 1e-9);
    for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
      CHECK(std::abs(b.ace_mw[ai][k]) < 1e-6);
      CHECK(std::abs(b.cmd_bess_mw[ai][k]) < 1e-6);
    }
  }
  for (const auto& kw : b.bess_kw) {
    for (double v : kw) CHECK(std::abs(v) < 1e-6);
  }
  CHECK(b.violations.empty());
}

TEST_CASE("identical configs give bit-identical results") {
  ScenarioConfig cfg = high_vi_config();
  const RunResult a = run_simulation(cfg);
  const RunResult b = run_simulation(cfg);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(same_physics(a.bundle, b.bundle));
  CHECK(a.bundle.exchange_iterations == b.bundle.exchange_iterations);
  CHECK(a.bundle.exchange_mismatch_pu == b.bundle.exchange_mismatch_pu);
}

TEST_CASE("the seed steers the irradiance draw") {
  TempDir dir_a("cosim-seed-a");
  TempDir dir_b("cosim-seed-b");
  ScenarioConfig a = load_scenario(scenario::build_experiment("bess-high-tc", 42, dir_a.str()));
  ScenarioConfig b = load_scenario(scenario::build_experiment("bess-high-tc", 43, dir_b.str()));
  CHECK(a.seed != b.seed);
  const auto* pa = a.find_profile("pv-f1");
  const auto* pb = b.find_profile("pv-f1");
  REQUIRE(pa != nullptr);
  REQUIRE(pb != nullptr);
  CHECK(pa->samples != pb->samples);
}

TEST_CASE("single-pass coupling equals capped iterative coupling field by field") {
  ScenarioConfig tc1 = high_vi_config();
  tc1.coupling = Coupling::tc;
  tc1.schedule.tc_max_iterations = 1;
  ScenarioConfig lc = high_vi_config();
  lc.coupling = Coupling::lc;

  const RunResult a = run_simulation(tc1);
  const RunResult b = run_simulation(lc);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(same_physics(a.bundle, b.bundle));
  CHECK(a.bundle.coupling == "tc");
  CHECK(b.bundle.coupling == "lc");

  for (int its : b.bundle.exchange_iterations) CHECK(its == 1);
  // A single pass cannot be blamed for missing a tolerance it never chased.
  for (const auto& w : a.bundle.warnings) CHECK(w.message.find("converge") == std::string::npos);
  for (const auto& w : b.bundle.warnings) CHECK(w.message.find("converge") == std::string::npos);
}

TEST_CASE("iterated coupling meets its tolerance and reports the work") {
  ScenarioConfig cfg = high_vi_config();
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  REQUIRE(!b.exchange_iterations.empty());
  for (std::size_t k = 0; k < b.exchange_iterations.size(); ++k) {
    CHECK(b.exchange_iterations[k] >= 1);
    CHECK(b.exchange_iterations[k] <= cfg.schedule.tc_max_iterations);
    CHECK(b.exchange_mismatch_pu[k] < cfg.schedule.tc_tolerance_pu);
  }
  const auto s = b.compute_summary(cfg.schedule.tc_tolerance_pu);
  CHECK(s.nonconverged_steps == 0);
  CHECK(s.exchange_mean_iterations >= 1.0);
}

TEST_CASE("aggregated model carries no feeder network") {
  ScenarioConfig cfg = high_vi_config();
  cfg.model = Model::aggregated;
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  CHECK(b.model == "aggregated");
  CHECK(b.feeder_vmin_pu.empty());
  CHECK(b.feeder_vmax_pu.empty());
  CHECK(b.violations.empty());  // nothing to observe them with
  REQUIRE(!b.pcc_p_mw.empty());
  REQUIRE(!b.bess_soc.empty());
  // Storage still moves and still respects its SoC window.
  double moved = 0.0;
  for (const auto& kw : b.bess_kw) {
    for (double v : kw) moved += std::abs(v);
  }
  CHECK(moved > 0.0);
  for (const auto& soc : b.bess_soc) {
    for (double v : soc) {
      CHECK(v >= 0.2 - 1e-12);
      CHECK(v <= 0.8 + 1e-12);
    }
  }
}

TEST_CASE("secondary commands hold between AGC intervals") {
  ScenarioConfig cfg = high_vi_config();
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  const auto per = static_cast<std::size_t>(cfg.schedule.dt_agc_s / cfg.schedule.dt_distribution_s);
  REQUIRE(per == 4);
  for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
    for (std::size_t k = 0; k < b.t_s.size(); ++k) {
      const std::size_t anchor = k - k % per;
      CHECK(b.cmd_conv_mw[ai][k] == b.cmd_conv_mw[ai][anchor]);
      CHECK(b.cmd_bess_mw[ai][k] == b.cmd_bess_mw[ai][anchor]);
    }
  }
}

TEST_CASE("a load step shows up exactly on schedule") {
  TempDir dir("cosim-step");
  ScenarioConfig cfg = quick_preset("droop-step", dir, 90.0);
  REQUIRE(cfg.disturbances.size() == 1);
  CHECK(cfg.disturbances[0].t_s == 60.0);
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  for (std::size_t k = 0; k < b.t_s.size(); ++k) {
    if (b.t_s[k] < 60.0) {
      CHECK(std::abs(b.freq_coi_hz[k]) < 1e-9);
    }
    if (b.t_s[k] >= 65.0) {
      CHECK(b.freq_coi_hz[k] < -1e-3);  // more load, lower frequency
    }
  }
}

TEST_CASE("boundary initialization starts the run at a fixed point") {
  ScenarioConfig cfg = high_vi_config();
  const RunResult r = run_simulation(cfg);
  REQUIRE(r.ok());
  const auto& b = r.bundle;
  CHECK(b.t_s[0] == 0.0);
  CHECK(std::abs(b.freq_coi_hz[0]) < 1e-9);
  for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
    CHECK(std::abs(b.tie_dev_mw[ai][0]) < 1e-6);
    CHECK(std::abs(b.ace_mw[ai][0]) < 1e-6);
  }
}

TEST_CASE("fatal disturbances end the run with the story so far") {
  TempDir dir("cosim-abort");
  ScenarioConfig cfg = quick_preset("quiescent", dir, 40.0);
  Disturbance d;
  d.t_s = 5.0;
  d.bus = 5;
  d.dp_mw = 900.0;
  cfg.disturbances.push_back(d);
  const RunResult r = run_simulation(cfg);
  REQUIRE_FALSE(r.ok());
  CHECK(!r.error->empty());
  CHECK(!r.bundle.t_s.empty());
  CHECK(r.bundle.t_s.size() < 40);  // stopped early
}

TEST_CASE("scenario files round-trip through the loader") {
  TempDir dir("cosim-load");
  const std::string path = scenario::build_experiment("agc-step", 9, dir.str());
  const ScenarioConfig cfg = load_scenario(path);
  CHECK(cfg.name == "agc-step");
  CHECK(cfg.seed == 9);
  CHECK(cfg.coupling == Coupling::tc);
  CHECK(cfg.model == Model::cosim);
  CHECK(cfg.agc_enabled);
  CHECK(cfg.schedule.horizon_s == 360.0);
  CHECK(cfg.start_clock_s == 12 * 3600);
  REQUIRE(cfg.bindings.size() == 3);
  CHECK(cfg.bindings[0].pcc_bus == 5);
  CHECK(cfg.feeders.size() == 3);
  REQUIRE(cfg.areas.size() == 2);
  CHECK(cfg.areas[0].beta_mw_per_hz == doctest::Approx(73.3333));
  REQUIRE(cfg.disturbances.size() == 1);
  CHECK(cfg.disturbances[0].dp_mw == 10.0);
  // Profiles arrive resampled onto the distribution step.
  for (const auto& p : cfg.profiles) CHECK(p.interval_s == cfg.schedule.dt_distribution_s);
}

TEST_CASE("schedule nesting is enforced") {
  SimulationSchedule s;
  s.horizon_s = 100.0;
  s.dt_transmission_s = 0.001;
  s.dt_distribution_s = 1.0;
  s.dt_agc_s = 4.0;
  CHECK_NOTHROW(s.validate());
  CHECK(s.transmission_steps_per_distribution() == 1000);
  CHECK(s.distribution_steps_per_agc() == 4);
  CHECK(s.distribution_steps() == 100);

  SimulationSchedule bad = s;
  bad.dt_distribution_s = 0.0003;  // not a multiple of the transmission step
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.dt_agc_s = 3.0;  // three distribution steps is fine
  CHECK_NOTHROW(bad.validate());
  bad.dt_agc_s = 2.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.horizon_s = 100.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.tc_max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("cross-file validation catches dangling references") {
  ScenarioConfig cfg = high_vi_config();
  SUBCASE("binding to a bus that is not a coupling point") {
    cfg.bindings[0].pcc_bus = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("binding to a missing bus") {
    cfg.bindings[0].pcc_bus = 99;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("duplicate binding for one coupling point") {
    cfg.bindings[1].pcc_bus = cfg.bindings[0].pcc_bus;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("roster unit points at an unknown feeder") {
    REQUIRE(!cfg.roster.empty());
    cfg.roster[0].feeder = "f9";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("roster unit misses its feeder attachment") {
    REQUIRE(!cfg.roster.empty());
    cfg.roster[0].id = "nobody-knows-me";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("participation names an unknown generator") {
    cfg.participation.emplace_back("G9", 0.5);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("load profile missing") {
    cfg.bindings[0].load_profile = "load-imaginary";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("profile window too short for the horizon") {
    cfg.schedule.horizon_s = 7200.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("area config missing for an area in the case") {
    cfg.areas.pop_back();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("untouched config still validates") { CHECK_NOTHROW(cfg.validate()); }
}

TEST_CASE("scenario parser reports file-level problems") {
  TempDir dir("cosim-parse");
  const std::string path = scenario::build_experiment("quiescent", 1, dir.str());

  SUBCASE("missing feeder file") {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("f1.fdr");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "fX.fdr");
    std::ofstream out(path);
    out << text;
    out.close();
    CHECK_THROWS_AS(load_scenario(path), ConfigError);
  }
  SUBCASE("unreadable scenario path") {
    CHECK_THROWS_AS(load_scenario(dir.file("missing.cfg")), ConfigError);
  }
}

TEST_CASE("preset catalog lists every runnable name") {
  const auto& cat = scenario::experiment_catalog();
  CHECK(cat.size() >= 10);
  for (const auto& e : cat) {
    CHECK(scenario::experiment_exists(e.name));
    CHECK(!e.summary.empty());
  }
  CHECK_FALSE(scenario::experiment_exists("made-up"));
  CHECK_THROWS_AS(scenario::build_experiment("made-up", 1, "/tmp"), ConfigError);
}
