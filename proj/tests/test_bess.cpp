#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "tdcosim/bess/roster.hpp"
#include "tdcosim/bess/unit.hpp"
#include "tdcosim/common/errors.hpp"

using namespace tdcosim;
using namespace tdcosim::bess;

namespace {

BessUnit::Params base_params() {
  BessUnit::Params p;
  p.id = "u1";
  p.feeder = "f1";
  p.node = "5";
  p.p_rating_kw = 150.0;
  p.e_rating_kwh = 63.15;
  p.soc_min = 0.2;
  p.soc_max = 0.8;
  p.eta_charge = 0.95;
  p.eta_discharge = 0.95;
  p.soc_initial = 0.5;
  return p;
}

/// Step a 1 W grid and keep the largest constant power that holds the SoC
/// window for a full minute. The SoC update is written out longhand here so
/// it cannot share a bug with the class under test.
double brute_force_daa(const BessUnit::Params& p, double soc, bool discharge,
                       bool include_efficiency) {
  const double eta_d = include_efficiency ? p.eta_discharge : 1.0;
  const double eta_c = include_efficiency ? p.eta_charge : 1.0;
  double best = 0.0;
  for (double kw = 0.0; kw <= p.p_rating_kw + 1e-9; kw += 0.001) {
    double end_soc;
    if (discharge) {
      end_soc = soc - (kw / eta_d) * (1.0 / 60.0) / p.e_rating_kwh;
      if (end_soc >= p.soc_min - 1e-12) best = kw;
    } else {
      end_soc = soc + (kw * eta_c) * (1.0 / 60.0) / p.e_rating_kwh;
      if (end_soc <= p.soc_max + 1e-12) best = kw;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("one-minute availability matches a 1 W exhaustive search") {
  for (const bool eff : {true, false}) {
    for (const double soc : {0.2, 0.201, 0.35, 0.5, 0.65, 0.79, 0.8}) {
      CAPTURE(eff);
      CAPTURE(soc);
      BessUnit::Params p = base_params();
      p.soc_initial = soc;
      const BessUnit u(p);
      const Daa d = u.daa({eff});
      CHECK(std::abs(d.discharge_kw - brute_force_daa(p, soc, true, eff)) < 0.002);
      CHECK(std::abs(d.charge_kw - brute_force_daa(p, soc, false, eff)) < 0.002);
    }
  }
}

TEST_CASE("availability saturates at the power rating when energy is plentiful") {
  BessUnit::Params p = base_params();
  p.e_rating_kwh = 5000.0;
  const BessUnit u(p);
  const Daa d = u.daa();
  CHECK(d.discharge_kw == p.p_rating_kw);
  CHECK(d.charge_kw == p.p_rating_kw);
}

TEST_CASE("empty and full batteries advertise one-sided availability") {
  BessUnit::Params p = base_params();
  p.soc_initial = p.soc_min;
  const BessUnit empty(p);
  CHECK(empty.daa().discharge_kw == 0.0);
  CHECK(empty.daa().charge_kw > 0.0);

  p.soc_initial = p.soc_max;
  const BessUnit full(p);
  CHECK(full.daa().charge_kw == 0.0);
  CHECK(full.daa().discharge_kw > 0.0);
}

TEST_CASE("setpoints clamp to the rating and to the energy window") {
  BessUnit u(base_params());
  CHECK(u.apply_setpoint(500.0, 1.0) == doctest::Approx(150.0));
  CHECK(u.apply_setpoint(-500.0, 1.0) == doctest::Approx(-150.0));
  CHECK(u.apply_setpoint(42.0, 1.0) == doctest::Approx(42.0));

  // Nearly drained: one hour of full discharge is infeasible, the feasible
  // value is eta_d * remaining energy / time.
  BessUnit::Params p = base_params();
  p.soc_initial = 0.21;
  BessUnit low(p);
  const double expect = p.eta_discharge * (0.21 - p.soc_min) * p.e_rating_kwh;  // 1 h
  CHECK(low.feasible_power_kw(150.0, 3600.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(low.apply_setpoint(150.0, 3600.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(low.soc() == p.soc_min);  // lands exactly on the floor
}

TEST_CASE("feasible_power never mutates state") {
  BessUnit u(base_params());
  const double soc0 = u.soc();
  u.feasible_power_kw(150.0, 3600.0);
  u.feasible_power_kw(-150.0, 3600.0);
  CHECK(u.soc() == soc0);
}

TEST_CASE("SoC stays inside the window and the energy ledger closes") {
  BessUnit u(base_params());
  const auto& p = u.params();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> cmd(-2.0 * p.p_rating_kw, 2.0 * p.p_rating_kw);
  double stored_kwh = u.soc() * p.e_rating_kwh;
  for (int k = 0; k < 10000; ++k) {
    const double delivered = u.apply_setpoint(cmd(rng), 4.0);
    const double hours = 4.0 / 3600.0;
    if (delivered > 0.0) stored_kwh -= delivered * hours / p.eta_discharge;
    if (delivered < 0.0) stored_kwh += -delivered * hours * p.eta_charge;
    CHECK(u.soc() >= p.soc_min - 1e-12);
    CHECK(u.soc() <= p.soc_max + 1e-12);
  }
  // Ledger drift only from the snap-to-limit rounding guards.
  CHECK(u.soc() * p.e_rating_kwh == doctest::Approx(stored_kwh).epsilon(1e-9));
}

TEST_CASE("round-trip efficiency burns energy both ways") {
  BessUnit u(base_params());
  const double soc0 = u.soc();
  const double out = u.apply_setpoint(100.0, 360.0);   // 10 kWh out
  const double back = u.apply_setpoint(-100.0, 360.0); // 10 kWh in
  CHECK(out == doctest::Approx(100.0));
  CHECK(back == doctest::Approx(-100.0));
  const double expected =
      soc0 + (-10.0 / u.params().eta_discharge + 10.0 * u.params().eta_charge) / 63.15;
  CHECK(u.soc() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(u.soc() < soc0);  // the cycle cost is strictly positive
}

TEST_CASE("fleet availability is the per-unit sum") {
  std::vector<BessUnit> fleet;
  for (int k = 0; k < 5; ++k) {
    BessUnit::Params p = base_params();
    p.id = "u" + std::to_string(k);
    p.soc_initial = 0.3 + 0.1 * k;
    fleet.emplace_back(p);
  }
  const Daa total = fleet_daa(fleet);
  double d = 0.0, c = 0.0;
  for (const auto& u : fleet) {
    d += u.daa().discharge_kw;
    c += u.daa().charge_kw;
  }
  CHECK(total.discharge_kw == doctest::Approx(d).epsilon(1e-15));
  CHECK(total.charge_kw == doctest::Approx(c).epsilon(1e-15));
}

TEST_CASE("construction rejects inconsistent parameters") {
  auto bad = [](auto&& mutate) {
    BessUnit::Params p = base_params();
    mutate(p);
    CHECK_THROWS_AS(BessUnit{p}, ConfigError);
  };
  bad([](auto& p) { p.e_rating_kwh = 0.0; });
  bad([](auto& p) { p.eta_charge = 0.0; });
  bad([](auto& p) { p.eta_discharge = 1.2; });
  bad([](auto& p) { p.soc_min = 0.9; });
  bad([](auto& p) { p.soc_max = 1.0001; });
  bad([](auto& p) { p.soc_initial = 0.05; });
  bad([](auto& p) { p.soc_initial = 0.95; });
}

TEST_CASE("zero-length interval is refused") {
  BessUnit u(base_params());
  CHECK_THROWS_AS(u.apply_setpoint(10.0, 0.0), ConfigError);
}

TEST_CASE("roster files round-trip") {
  std::vector<BessUnit::Params> roster;
  for (int k = 0; k < 4; ++k) {
    BessUnit::Params p = base_params();
    p.id = "f1-b" + std::to_string(k);
    p.feeder = "f1";
    p.node = std::to_string(10 + k);
    p.phases = k % 2 ? "abc" : "b";
    p.p_rating_kw = 25.0 + k * 13.7;
    p.e_rating_kwh = 10.0 + k * 0.123456789;
    p.soc_initial = 0.45 + 0.01 * k;
    roster.push_back(p);
  }
  std::ostringstream os;
  write_roster(os, roster);
  std::istringstream is(os.str());
  const auto back = read_roster(is, "mem");
  REQUIRE(back.size() == roster.size());
  for (std::size_t i = 0; i < roster.size(); ++i) {
    CHECK(back[i].id == roster[i].id);
    CHECK(back[i].feeder == roster[i].feeder);
    CHECK(back[i].node == roster[i].node);
    CHECK(back[i].phases == roster[i].phases);
    CHECK(back[i].p_rating_kw == roster[i].p_rating_kw);
    CHECK(back[i].e_rating_kwh == roster[i].e_rating_kwh);
    CHECK(back[i].soc_min == roster[i].soc_min);
    CHECK(back[i].soc_max == roster[i].soc_max);
    CHECK(back[i].eta_charge == roster[i].eta_charge);
    CHECK(back[i].eta_discharge == roster[i].eta_discharge);
    CHECK(back[i].soc_initial == roster[i].soc_initial);
  }
}

TEST_CASE("roster parser flags the offending line") {
  std::istringstream is("unit u1 feeder f1 node 3 banana\n");
  CHECK_THROWS_AS(read_roster(is, "bad.roster"), ParseError);
}
