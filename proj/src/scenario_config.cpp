#include "tdcosim/cosim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "tdcosim/bess/roster.hpp"
#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"
#include "tdcosim/distribution/feeder_file.hpp"
#include "tdcosim/transmission/case_file.hpp"

namespace tdcosim::cosim {
namespace {

// Returns k >= 1 such that whole == k * part, or throws.
long long exact_multiple(double whole, double part, const std::string& what) {
  if (!(part > 0.0) || !(whole > 0.0)) {
    throw ConfigError(what + ": intervals must be positive");
  }
  const double ratio = whole / part;
  const long long k = std::llround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * static_cast<double>(k)) {
    throw ConfigError(what + ": " + std::to_string(whole) + " s is not an integer multiple of " +
                      std::to_string(part) + " s");
  }
  return k;
}

}  // namespace

std::string coupling_name(Coupling c) { return c == Coupling::tc ? "tc" : "lc"; }
std::string model_name(Model m) { return m == Model::cosim ? "cosim" : "aggregated"; }

int SimulationSchedule::transmission_steps_per_distribution() const {
  return static_cast<int>(
      exact_multiple(dt_distribution_s, dt_transmission_s, "distribution step"));
}

int SimulationSchedule::distribution_steps_per_agc() const {
  return static_cast<int>(exact_multiple(dt_agc_s, dt_distribution_s, "AGC interval"));
}

long long SimulationSchedule::distribution_steps() const {
  return exact_multiple(horizon_s, dt_distribution_s, "horizon");
}

void SimulationSchedule::validate() const {
  transmission_steps_per_distribution();
  distribution_steps_per_agc();
  distribution_steps();
  if (!(tc_tolerance_pu > 0.0)) throw ConfigError("coupling tolerance must be positive");
  if (tc_max_iterations < 1) throw ConfigError("coupling iteration cap must be at least 1");
}

const scenario::Profile* ScenarioConfig::find_profile(const std::string& id) const {
  for (const auto& p : profiles) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const AreaConfig* ScenarioConfig::find_area(int area_id) const {
  for (const auto& a : areas) {
    if (a.area_id == area_id) return &a;
  }
  return nullptr;
}

void ScenarioConfig::validate() const {
  schedule.validate();
  system.validate();
  for (const auto& p : profiles) p.validate();
  for (const auto& f : feeders) f.validate();

  if (bindings.size() != feeders.size()) {
    throw ConfigError("feeder bindings and loaded feeders are out of step");
  }

  // One profile window must cover [start, start + horizon] for every
  // profile a device can read.
  auto check_window = [&](const scenario::Profile& p) {
    const double offset = static_cast<double>(start_clock_s - p.window_start_s);
    if (offset < -1e-6 || offset + schedule.horizon_s > p.duration_s() + 1e-6) {
      throw ConfigError("profile '" + p.id + "' window [" + scenario::format_clock(p.window_start_s) +
                        ", " + scenario::format_clock(p.window_end_s()) +
                        "] does not cover the simulated interval starting " +
                        scenario::format_clock(start_clock_s));
    }
  };

  std::set<int> pcc_seen;
  std::set<std::string> feeder_ids;
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    const auto& b = bindings[i];
    const auto& f = feeders[i];
    if (!feeder_ids.insert(f.id).second) throw ConfigError("duplicate feeder id '" + f.id + "'");
    const int bi = system.bus_index(b.pcc_bus);
    if (bi < 0) throw ConfigError("feeder '" + f.id + "' bound to unknown bus " +
                                  std::to_string(b.pcc_bus));
    if (!system.buses[static_cast<std::size_t>(bi)].is_pcc) {
      throw ConfigError("bus " + std::to_string(b.pcc_bus) + " is not marked as a PCC");
    }
    if (!pcc_seen.insert(b.pcc_bus).second) {
      throw ConfigError("two feeders bound to bus " + std::to_string(b.pcc_bus));
    }
    const auto* lp = find_profile(b.load_profile);
    if (!lp) throw ConfigError("feeder '" + f.id + "' references unknown load profile '" +
                               b.load_profile + "'");
    if (lp->kind != scenario::Profile::Kind::load) {
      throw ConfigError("profile '" + b.load_profile + "' is not a load profile");
    }
    check_window(*lp);
    for (const auto& pv : f.pv_systems) {
      const auto* pp = find_profile(pv.profile_id);
      if (!pp) throw ConfigError("pv '" + pv.id + "' references unknown profile '" +
                                 pv.profile_id + "'");
      if (pp->kind != scenario::Profile::Kind::pv) {
        throw ConfigError("profile '" + pv.profile_id + "' is not a pv profile");
      }
      check_window(*pp);
    }
  }

  // Roster units and feeder attachment records must agree 1:1.
  std::map<std::string, const distribution::Feeder*> by_id;
  for (const auto& f : feeders) by_id[f.id] = &f;
  std::set<std::string> roster_ids;
  for (const auto& u : roster) {
    if (!roster_ids.insert(u.id).second) throw ConfigError("duplicate bess unit '" + u.id + "'");
    auto it = by_id.find(u.feeder);
    if (it == by_id.end()) {
      throw ConfigError("bess '" + u.id + "' placed on unknown feeder '" + u.feeder + "'");
    }
    const auto& atts = it->second->bess_attachments;
    const auto att = std::find_if(atts.begin(), atts.end(),
                                  [&](const auto& a) { return a.unit_id == u.id; });
    if (att == atts.end()) {
      throw ConfigError("feeder '" + u.feeder + "' has no attachment record for bess '" + u.id +
                        "'");
    }
    if (std::to_string(att->node) != u.node ||
        att->phases != distribution::parse_phases(u.phases)) {
      throw ConfigError("bess '" + u.id + "': roster and feeder disagree on its connection");
    }
  }
  for (const auto& f : feeders) {
    for (const auto& a : f.bess_attachments) {
      if (!roster_ids.count(a.unit_id)) {
        throw ConfigError("feeder '" + f.id + "' attaches bess '" + a.unit_id +
                          "' that the roster does not define");
      }
    }
  }

  // Every area needs a bias for its ACE; no orphan area blocks.
  const auto sys_areas = system.area_ids();
  for (int a : sys_areas) {
    if (!find_area(a)) throw ConfigError("no controller settings for area " + std::to_string(a));
  }
  std::set<int> area_seen;
  for (const auto& a : areas) {
    if (!area_seen.insert(a.area_id).second) {
      throw ConfigError("duplicate settings for area " + std::to_string(a.area_id));
    }
    if (std::find(sys_areas.begin(), sys_areas.end(), a.area_id) == sys_areas.end()) {
      throw ConfigError("settings for unknown area " + std::to_string(a.area_id));
    }
    if (!(a.beta_mw_per_hz > 0.0)) {
      throw ConfigError("area " + std::to_string(a.area_id) + ": bias must be positive");
    }
  }

  // Participation: every AGC generator carries exactly one factor and each
  // area's factors sum to one.
  std::map<std::string, const transmission::GeneratorUnit*> gens;
  for (const auto& g : system.generators) gens[g.id] = &g;
  std::map<int, double> factor_sum;
  std::set<std::string> part_seen;
  for (const auto& [gid, factor] : participation) {
    auto it = gens.find(gid);
    if (it == gens.end()) throw ConfigError("participation entry for unknown generator '" + gid + "'");
    if (!it->second->agc) {
      throw ConfigError("generator '" + gid + "' is not on AGC but has a participation factor");
    }
    if (!part_seen.insert(gid).second) {
      throw ConfigError("duplicate participation entry for '" + gid + "'");
    }
    if (factor < 0.0) throw ConfigError("participation factor for '" + gid + "' is negative");
    const int a = system.buses[static_cast<std::size_t>(system.bus_index(it->second->bus))].area;
    factor_sum[a] += factor;
  }
  for (const auto& g : system.generators) {
    if (g.agc && !part_seen.count(g.id)) {
      throw ConfigError("AGC generator '" + g.id + "' has no participation factor");
    }
  }
  for (const auto& [a, sum] : factor_sum) {
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ConfigError("participation factors in area " + std::to_string(a) +
                        " sum to " + std::to_string(sum) + ", expected 1");
    }
  }

  if (!tie_schedule_auto) {
    for (const auto& [a, mw] : tie_schedule_mw) {
      (void)mw;
      if (std::find(sys_areas.begin(), sys_areas.end(), a) == sys_areas.end()) {
        throw ConfigError("tie schedule for unknown area " + std::to_string(a));
      }
    }
  }

  for (const auto& d : disturbances) {
    if (system.bus_index(d.bus) < 0) {
      throw ConfigError("disturbance at unknown bus " + std::to_string(d.bus));
    }
    if (d.t_s < 0.0) throw ConfigError("disturbance time must be non-negative");
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  const fs::path dir = fs::path(path).parent_path();
  const auto resolve = [&](const std::string& rel) { return (dir / rel).string(); };

  ScenarioConfig cfg;
  bool have_case = false;
  std::string raw;
  int lineno = 0;
  const auto fail = [&](const std::string& what) -> void { throw ParseError(path, lineno, what); };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    const auto tok = text::tokens(line);
    const std::string& key = tok[0];

    const auto need = [&](std::size_t n) {
      if (tok.size() < n + 1) fail("'" + key + "' needs " + std::to_string(n) + " value(s)");
    };
    const auto num_at = [&](std::size_t i) {
      double v = 0.0;
      if (!text::parse_double(tok[i], v)) fail("bad number '" + tok[i] + "'");
      return v;
    };
    const auto int_at = [&](std::size_t i) {
      int v = 0;
      if (!text::parse_int(tok[i], v)) fail("bad integer '" + tok[i] + "'");
      return v;
    };
    const auto onoff = [&](const std::string& v) {
      if (v == "on" || v == "true") return true;
      if (v == "off" || v == "false") return false;
      fail("expected on/off, got '" + v + "'");
      return false;
    };

    if (key == "name") {
      need(1);
      cfg.name = tok[1];
    } else if (key == "model") {
      need(1);
      if (tok[1] == "cosim") cfg.model = Model::cosim;
      else if (tok[1] == "aggregated") cfg.model = Model::aggregated;
      else fail("model must be cosim or aggregated");
    } else if (key == "coupling") {
      need(1);
      if (tok[1] == "tc") cfg.coupling = Coupling::tc;
      else if (tok[1] == "lc") cfg.coupling = Coupling::lc;
      else fail("coupling must be tc or lc");
    } else if (key == "seed") {
      need(1);
      try {
        cfg.seed = std::stoull(tok[1]);
      } catch (const std::exception&) {
        fail("bad seed '" + tok[1] + "'");
      }
    } else if (key == "start") {
      need(1);
      try {
        cfg.start_clock_s = scenario::parse_clock(tok[1]);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    } else if (key == "horizon_s") {
      need(1);
      cfg.schedule.horizon_s = num_at(1);
    } else if (key == "dt_transmission_s") {
      need(1);
      cfg.schedule.dt_transmission_s = num_at(1);
    } else if (key == "dt_distribution_s") {
      need(1);
      cfg.schedule.dt_distribution_s = num_at(1);
    } else if (key == "dt_agc_s") {
      need(1);
      cfg.schedule.dt_agc_s = num_at(1);
    } else if (key == "tc_tolerance_pu") {
      need(1);
      cfg.schedule.tc_tolerance_pu = num_at(1);
    } else if (key == "tc_max_iterations") {
      need(1);
      cfg.schedule.tc_max_iterations = int_at(1);
    } else if (key == "agc") {
      need(1);
      cfg.agc_enabled = onoff(tok[1]);
    } else if (key == "daa_efficiency") {
      need(1);
      cfg.daa_include_efficiency = onoff(tok[1]);
    } else if (key == "tie_schedule") {
      need(1);
      if (tok[1] == "auto") {
        cfg.tie_schedule_auto = true;
        cfg.tie_schedule_mw.clear();
      } else {
        cfg.tie_schedule_auto = false;
        need(2);
        cfg.tie_schedule_mw.emplace_back(int_at(1), num_at(2));
      }
    } else if (key == "case") {
      need(1);
      cfg.system = transmission::load_case(resolve(tok[1]));
      have_case = true;
    } else if (key == "profiles") {
      need(1);
      auto loaded = scenario::load_profiles(resolve(tok[1]));
      cfg.profiles.insert(cfg.profiles.end(), loaded.begin(), loaded.end());
    } else if (key == "roster") {
      need(1);
      auto loaded = bess::load_roster(resolve(tok[1]));
      cfg.roster.insert(cfg.roster.end(), loaded.begin(), loaded.end());
    } else if (key == "feeder") {
      need(1);
      FeederBinding b;
      b.feeder_file = tok[1];
      bool have_pcc = false, have_profile = false;
      for (std::size_t i = 2; i + 1 < tok.size(); i += 2) {
        if (tok[i] == "pcc") {
          b.pcc_bus = int_at(i + 1);
          have_pcc = true;
        } else if (tok[i] == "load_profile") {
          b.load_profile = tok[i + 1];
          have_profile = true;
        } else {
          fail("unknown feeder keyword '" + tok[i] + "'");
        }
      }
      if (!have_pcc || !have_profile) fail("feeder binding needs pcc and load_profile");
      cfg.feeders.push_back(distribution::load_feeder(resolve(b.feeder_file)));
      cfg.bindings.push_back(std::move(b));
    } else if (key == "area") {
      need(1);
      AreaConfig a;
      a.area_id = int_at(1);
      a.bess.tau_s = 1.0;  // fast loop default; the slow loop keeps 60 s
      if ((tok.size() - 2) % 2 != 0) fail("area record has a dangling keyword");
      for (std::size_t i = 2; i + 1 < tok.size(); i += 2) {
        const std::string& k = tok[i];
        const double v = num_at(i + 1);
        if (k == "beta") a.beta_mw_per_hz = v;
        else if (k == "conv_kp") a.conventional.kp = v;
        else if (k == "conv_ki") a.conventional.ki = v;
        else if (k == "conv_tau") a.conventional.tau_s = v;
        else if (k == "conv_limit") {
          a.conventional.out_min = -v;
          a.conventional.out_max = v;
        } else if (k == "bess_kp") a.bess.kp = v;
        else if (k == "bess_ki") a.bess.ki = v;
        else if (k == "bess_tau") a.bess.tau_s = v;
        else if (k == "bess_limit") {
          a.bess.out_min = -v;
          a.bess.out_max = v;
        } else {
          fail("unknown area keyword '" + k + "'");
        }
      }
      cfg.areas.push_back(a);
    } else if (key == "participation") {
      need(2);
      cfg.participation.emplace_back(tok[1], num_at(2));
    } else if (key == "disturbance") {
      Disturbance d;
      bool have_bus = false;
      if ((tok.size() - 1) % 2 != 0) fail("disturbance record has a dangling keyword");
      for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
        const std::string& k = tok[i];
        if (k == "t") d.t_s = num_at(i + 1);
        else if (k == "bus") {
          d.bus = int_at(i + 1);
          have_bus = true;
        } else if (k == "p_mw") d.dp_mw = num_at(i + 1);
        else if (k == "q_mvar") d.dq_mvar = num_at(i + 1);
        else fail("unknown disturbance keyword '" + k + "'");
      }
      if (!have_bus) fail("disturbance needs a bus");
      cfg.disturbances.push_back(d);
    } else {
      fail("unknown scenario keyword '" + key + "'");
    }
  }

  if (!have_case) throw ConfigError(path + ": scenario never names a case file");

  // Device lookups run on the distribution grid; bring every profile onto it.
  for (auto& p : cfg.profiles) {
    if (std::abs(p.interval_s - cfg.schedule.dt_distribution_s) > 1e-12) {
      p = scenario::resample(p, cfg.schedule.dt_distribution_s);
    }
  }

  cfg.validate();
  return cfg;
}

}  // namespace tdcosim::cosim
