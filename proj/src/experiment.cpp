#include "tdcosim/scenario/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tdcosim/bess/roster.hpp"
#include "tdcosim/common/errors.hpp"
#include "tdcosim/distribution/feeder.hpp"
#include "tdcosim/distribution/feeder_file.hpp"
#include "tdcosim/scenario/profile.hpp"
#include "tdcosim/transmission/case_file.hpp"

namespace tdcosim::scenario {
namespace {

namespace fs = std::filesystem;

constexpr int kStartClock = 12 * 3600;
constexpr double kViLow = 1.33, kViMed = 6.29, kViHigh = 15.58;
constexpr double kPvPerFeederKw = 12000.0;
constexpr double kFleetPerFeederKw = 6000.0;
constexpr int kUnitsPerFeeder = 40;
constexpr double kEnergyHoursEqual = 0.421;  // kWh per kW, equal fleet
constexpr double kEnergyHeteroKwh = 10.0;    // flat energy, heterogeneous fleet

enum class Fleet { none, equal, hetero };

struct Preset {
  std::string name;
  std::string summary;
  double horizon_s = 3600.0;
  bool agc = true;
  bool lossless = false;
  Fleet fleet = Fleet::none;
  double vi_target = 0.0;  // 0 leaves the feeders without PV
  bool weak_feeder = false;
  bool step_disturbance = false;  // +10 MW at bus 5, t=60 s
};

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"quiescent", "flat boundary conditions, controllers idle; nothing should move", 120.0,
       true, false, Fleet::none, 0.0, false, false},
      {"droop-step", "primary response to a +10 MW step, AGC off, lossless network", 120.0,
       false, true, Fleet::none, 0.0, false, true},
      {"agc-step", "secondary control returns a +10 MW step to schedule, lossless network",
       360.0, true, true, Fleet::none, 0.0, false, true},
      {"no-bess-low-tc", "low-variability irradiance, no storage fleet", 3600.0, true, false,
       Fleet::none, kViLow, false, false},
      {"no-bess-med-tc", "medium-variability irradiance, no storage fleet", 3600.0, true, false,
       Fleet::none, kViMed, false, false},
      {"no-bess-high-tc", "high-variability irradiance, no storage fleet", 3600.0, true, false,
       Fleet::none, kViHigh, false, false},
      {"bess-low-tc", "low-variability irradiance, equal storage fleet on regulation", 3600.0,
       true, false, Fleet::equal, kViLow, false, false},
      {"bess-med-tc", "medium-variability irradiance, equal storage fleet", 3600.0, true, false,
       Fleet::equal, kViMed, false, false},
      {"bess-high-tc", "high-variability irradiance, equal storage fleet (default case)",
       3600.0, true, false, Fleet::equal, kViHigh, false, false},
      {"fleet-hetero-tc", "high variability with a heterogeneous fleet; rerun with the "
                          "aggregated model to see the believed-capability gap",
       3600.0, true, false, Fleet::hetero, kViHigh, false, false},
      {"weak-feeder", "marginal feeder impedance under a load ramp with the fleet dispatching; "
                      "voltage violations only the detailed model can see",
       900.0, true, false, Fleet::equal, kViHigh, true, false},
  };
  return list;
}

const Preset* find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

// ---- feeder synthesis ------------------------------------------------------

struct FeederPlan {
  std::string id;
  int pcc = 0;
  double p_kw = 0.0;
  double q_kvar = 0.0;
  double pv_kw = 0.0;
  std::string pv_profile;
  double z_scale = 1.0;
  double len_scale = 1.0;  // stretches every segment, for long rural variants
};

distribution::Zmatrix z_matrix(double self_r, double self_x, double mut_r, double mut_x,
                               double scale) {
  distribution::Zmatrix z{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      z[i][j] = (i == j ? distribution::Complex(self_r, self_x)
                        : distribution::Complex(mut_r, mut_x)) *
                scale;
    }
  }
  return z;
}

/// 24-node feeder: a short trunk splitting into two 34.5 kV laterals and one
/// lateral stepped down to 13.2 kV through a transformer. Returns the loaded
/// nodes for device placement.
distribution::Feeder make_feeder(const FeederPlan& plan, std::vector<int>& load_nodes) {
  distribution::Feeder f;
  f.id = plan.id;
  f.head_node = 100;
  const double s = plan.z_scale;
  f.line_configs.push_back({"trunk", z_matrix(0.08, 0.20, 0.02, 0.08, s)});
  f.line_configs.push_back({"lateral", z_matrix(0.15, 0.35, 0.03, 0.12, s)});
  f.line_configs.push_back({"lateral2", z_matrix(0.08, 0.16, 0.015, 0.06, s)});

  const auto add_node = [&](int id, double kv) {
    f.nodes.push_back({id, distribution::kPhaseAbc, kv});
  };
  const auto add_line = [&](int from, int to, double km, const char* cfg) {
    f.segments.push_back({from, to, km * plan.len_scale, cfg});
  };

  add_node(100, 34.5);
  for (int n = 101; n <= 103; ++n) {
    add_node(n, 34.5);
    add_line(n - 1 == 100 ? 100 : n - 1, n, 0.2, "trunk");
  }
  for (int lat = 0; lat < 2; ++lat) {
    const int base = 110 + 10 * lat;
    for (int k = 0; k < 7; ++k) {
      add_node(base + k, 34.5);
      add_line(k == 0 ? 103 : base + k - 1, base + k, 0.3, "lateral");
    }
  }
  add_node(130, 34.5);
  add_line(103, 130, 0.3, "lateral");
  for (int k = 1; k <= 5; ++k) add_node(130 + k, 13.2);
  f.transformers.push_back({130, 131, 0.02 * s, 0.12 * s, 34.5 / 13.2});
  for (int k = 2; k <= 5; ++k) add_line(130 + k - 1, 130 + k, 0.25, "lateral2");

  struct Pick {
    int node;
    double weight;
  };
  std::vector<Pick> picks;
  for (int k = 0; k < 7; ++k) picks.push_back({110 + k, 1.0});
  for (int k = 0; k < 7; ++k) picks.push_back({120 + k, 1.0});
  picks.push_back({130, 1.0});
  for (int k = 1; k <= 5; ++k) picks.push_back({130 + k, 0.5});
  double total_w = 0.0;
  for (const auto& p : picks) total_w += p.weight;

  // Mild phase unbalance, rotated node to node, so the three-phase solution
  // is exercised without stressing any one phase.
  const double split[3] = {0.40, 0.33, 0.27};
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const double p_node = plan.p_kw * picks[i].weight / total_w;
    const double q_node = plan.q_kvar * picks[i].weight / total_w;
    for (int ph = 0; ph < 3; ++ph) {
      const double w = split[(ph + i) % 3];
      f.loads.push_back({picks[i].node, ph, p_node * w, q_node * w});
    }
    load_nodes.push_back(picks[i].node);
  }

  if (plan.pv_kw > 0.0) {
    const int sites[6] = {111, 113, 121, 124, 132, 134};
    for (int k = 0; k < 6; ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-pv%d", plan.id.c_str(), k + 1);
      f.pv_systems.push_back(
          {id, sites[k], distribution::kPhaseAbc, plan.pv_kw / 6.0, plan.pv_profile});
    }
  }
  return f;
}

void add_fleet(Fleet kind, distribution::Feeder& f, const std::vector<int>& load_nodes,
               std::vector<bess::BessUnit::Params>& roster) {
  if (kind == Fleet::none) return;
  const int n = kUnitsPerFeeder;
  std::vector<double> p_kw(static_cast<std::size_t>(n));
  std::vector<double> e_kwh(static_cast<std::size_t>(n));
  if (kind == Fleet::equal) {
    const double p = kFleetPerFeederKw / n;
    for (int k = 0; k < n; ++k) {
      p_kw[k] = p;
      e_kwh[k] = kEnergyHoursEqual * p;
    }
  } else {
    // Ratings spread over a 20x geometric range, normalized to the same
    // fleet total; flat per-unit energy, so big units are energy-starved.
    const double r = std::pow(20.0, 1.0 / (n - 1));
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      p_kw[k] = std::pow(r, k);
      sum += p_kw[k];
    }
    for (int k = 0; k < n; ++k) {
      p_kw[k] *= kFleetPerFeederKw / sum;
      e_kwh[k] = kEnergyHeteroKwh;
    }
  }
  for (int k = 0; k < n; ++k) {
    const int node = load_nodes[static_cast<std::size_t>(k) % load_nodes.size()];
    char id[32];
    std::snprintf(id, sizeof id, "%s-b%02d", f.id.c_str(), k + 1);
    bess::BessUnit::Params u;
    u.id = id;
    u.feeder = f.id;
    u.node = std::to_string(node);
    u.phases = "abc";
    u.p_rating_kw = p_kw[k];
    u.e_rating_kwh = e_kwh[k];
    roster.push_back(u);
    f.bess_attachments.push_back({u.id, node, distribution::kPhaseAbc});
  }
}

Profile constant_load_profile(const std::string& id, double horizon_s, double value) {
  Profile p;
  p.id = id;
  p.kind = Profile::Kind::load;
  p.interval_s = 60.0;
  p.window_start_s = kStartClock;
  p.samples.assign(static_cast<std::size_t>(std::llround(horizon_s / 60.0)), value);
  return p;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> list = [] {
    std::vector<ExperimentInfo> out;
    for (const auto& p : presets()) out.push_back({p.name, p.summary});
    return out;
  }();
  return list;
}

bool experiment_exists(const std::string& name) { return find_preset(name) != nullptr; }

transmission::TransmissionSystem two_area_case(bool lossless) {
  using transmission::BusType;
  transmission::TransmissionSystem sys;
  sys.base_mva = 100.0;
  sys.f_nominal_hz = 60.0;

  const auto bus = [&](int id, BusType type, int area, double kv) {
    transmission::Bus b;
    b.id = id;
    b.type = type;
    b.area = area;
    b.base_kv = kv;
    return b;
  };
  auto b1 = bus(1, BusType::slack, 1, 16.5);
  b1.vm_setpoint = 1.04;
  auto b2 = bus(2, BusType::pv, 2, 18.0);
  b2.vm_setpoint = 1.025;
  auto b3 = bus(3, BusType::pv, 1, 13.8);
  b3.vm_setpoint = 1.025;
  auto b4 = bus(4, BusType::pq, 1, 230.0);
  auto b5 = bus(5, BusType::pq, 1, 230.0);
  b5.is_pcc = true;
  // PCC bus loads are the static remainder; the modeled feeder slice stacks
  // on top so each bus still carries its classical total (125/90/100 MW).
  b5.p_load_mw = 117.0;
  b5.q_load_mvar = 46.8;
  auto b6 = bus(6, BusType::pq, 1, 230.0);
  b6.is_pcc = true;
  b6.p_load_mw = 83.0;
  b6.q_load_mvar = 27.69;
  auto b7 = bus(7, BusType::pq, 2, 230.0);
  auto b8 = bus(8, BusType::pq, 2, 230.0);
  b8.is_pcc = true;
  b8.p_load_mw = 92.5;
  b8.q_load_mvar = 32.375;
  auto b9 = bus(9, BusType::pq, 1, 230.0);
  sys.buses = {b1, b2, b3, b4, b5, b6, b7, b8, b9};

  const auto line = [&](int from, int to, double r, double x, double b) {
    sys.branches.push_back({from, to, lossless ? 0.0 : r, x, b});
  };
  line(1, 4, 0.0, 0.0576, 0.0);
  line(2, 7, 0.0, 0.0625, 0.0);
  line(3, 9, 0.0, 0.0586, 0.0);
  line(4, 5, 0.010, 0.085, 0.176);
  line(4, 6, 0.017, 0.092, 0.158);
  line(5, 7, 0.032, 0.161, 0.306);  // tie, area 1 to 2
  line(6, 9, 0.039, 0.170, 0.358);
  line(7, 8, 0.0085, 0.072, 0.149);
  line(8, 9, 0.0119, 0.1008, 0.209);  // tie, area 2 to 1

  const auto gen = [&](const std::string& id, int at, double h, double xdp, double p_mw,
                       bool agc) {
    transmission::GeneratorUnit g;
    g.id = id;
    g.bus = at;
    g.mva = 100.0;  // parameters below are already on the system base
    g.h_s = h;
    g.d_pu = 2.0;
    g.xdp_pu = xdp;
    g.r_droop = 0.05;
    g.tg_s = 0.2;
    g.tt_s = 0.5;
    g.p_sched_mw = p_mw;
    g.agc = agc;
    if (agc) {
      g.headroom_up_mw = 20.0;
      g.headroom_down_mw = 20.0;
    }
    sys.generators.push_back(g);
  };
  gen("G1", 1, 23.64, 0.0608, 0.0, false);
  gen("G2", 2, 6.40, 0.1198, 163.0, true);
  gen("G3", 3, 3.01, 0.1813, 85.0, true);
  return sys;
}

std::string build_experiment(const std::string& name, std::uint64_t seed,
                             const std::string& dir) {
  const Preset* p = find_preset(name);
  if (!p) {
    throw ConfigError("unknown experiment '" + name + "'; the catalog command lists the presets");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create '" + dir + "': " + ec.message());
  const auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };

  transmission::TransmissionSystem sys = two_area_case(p->lossless);
  if (p->weak_feeder) {
    for (auto& b : sys.buses) {
      if (b.id == 5) {
        b.p_load_mw = 100.0;  // 25 MW moves into the modeled feeder slice
        b.q_load_mvar = 40.0;
      }
    }
  }
  transmission::save_case(at("twoarea.case"), sys);

  std::vector<Profile> profiles;
  // Loads stay flat in every preset so PV fluctuation is the only stochastic
  // driver in the variability comparisons; the weak-feeder study adds a ramp.
  const std::string load_profile_id = "load-flat";
  profiles.push_back(constant_load_profile("load-flat", p->horizon_s, 1.0));
  if (p->weak_feeder) {
    Profile ramp = constant_load_profile("load-ramp", p->horizon_s, 1.0);
    const std::size_t n = ramp.samples.size();
    for (std::size_t k = 0; k < n; ++k) {
      ramp.samples[k] = 1.0 + 0.60 * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    profiles.push_back(ramp);
  }
  if (p->vi_target > 0.0) {
    for (int i = 0; i < 3; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "pv-f%d", i + 1);
      const Profile base = clear_sky_profile(id, kStartClock, p->horizon_s, 1.0);
      profiles.push_back(generate_pv_profile(base, p->vi_target, seed + 101u * i));
    }
  }
  save_profiles(at("profiles.prof"), profiles);

  FeederPlan plans[3] = {
      {"f1", 5, 8000.0, 3200.0, 0.0, "pv-f1", 1.0},
      {"f2", 6, 7000.0, 2310.0, 0.0, "pv-f2", 1.0},
      {"f3", 8, 7500.0, 2625.0, 0.0, "pv-f3", 1.0},
  };
  if (p->vi_target > 0.0) {
    for (auto& plan : plans) plan.pv_kw = kPvPerFeederKw;
  }
  if (p->weak_feeder) {
    // Long rural variant: a 25 MW slice over stretched, higher-impedance
    // lines sags into undervoltage as the ramp grows; the bus static load
    // drops by the same 17 MW so the PCC total stays at 125 MW.
    plans[0].p_kw = 25000.0;
    plans[0].q_kvar = 10000.0;
    plans[0].z_scale = 2.0;
    plans[0].len_scale = 6.0;
  }

  std::vector<bess::BessUnit::Params> roster;
  for (const auto& plan : plans) {
    std::vector<int> load_nodes;
    auto f = make_feeder(plan, load_nodes);
    add_fleet(p->fleet, f, load_nodes, roster);
    distribution::save_feeder(at(plan.id + ".fdr"), f);
  }
  if (!roster.empty()) bess::save_roster(at("fleet.roster"), roster);

  // One AGC machine per area at R=0.05 and D=2 on the 100 MVA base:
  // each contributes (1/R + D) * base / f0 = 36.67 MW/Hz to its area bias.
  const double beta1 = 2.0 * (20.0 + 2.0) * 100.0 / 60.0;
  const double beta2 = (20.0 + 2.0) * 100.0 / 60.0;

  std::ofstream out(at("scenario.cfg"));
  if (!out) throw ConfigError("cannot write scenario file in '" + dir + "'");
  char buf[256];
  out << "name " << p->name << "\n";
  out << "model cosim\ncoupling tc\n";
  out << "seed " << seed << "\n";
  out << "start 12:00\n";
  std::snprintf(buf, sizeof buf,
                "horizon_s %.17g\ndt_transmission_s 0.001\ndt_distribution_s 1\ndt_agc_s 4\n",
                p->horizon_s);
  out << buf;
  out << "tc_tolerance_pu 1e-4\ntc_max_iterations 20\n";
  out << "agc " << (p->agc ? "on" : "off") << "\n";
  out << "daa_efficiency on\ntie_schedule auto\n";
  out << "case twoarea.case\nprofiles profiles.prof\n";
  if (!roster.empty()) out << "roster fleet.roster\n";
  const double fleet_mw = kFleetPerFeederKw / 1000.0;
  std::snprintf(buf, sizeof buf,
                "area 1 beta %.4f conv_kp 3 conv_ki 0.05 conv_tau 60 conv_limit 20"
                " bess_kp 1 bess_ki 0.1 bess_tau 1 bess_limit %.4f\n",
                beta1, 2.0 * fleet_mw);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "area 2 beta %.4f conv_kp 3 conv_ki 0.05 conv_tau 60 conv_limit 20"
                " bess_kp 1 bess_ki 0.1 bess_tau 1 bess_limit %.4f\n",
                beta2, fleet_mw);
  out << buf;
  out << "participation G3 1\nparticipation G2 1\n";
  for (const auto& plan : plans) {
    const bool ramp = p->weak_feeder && plan.id == "f1";
    out << "feeder " << plan.id << ".fdr pcc " << plan.pcc << " load_profile "
        << (ramp ? "load-ramp" : load_profile_id) << "\n";
  }
  if (p->step_disturbance) out << "disturbance t 60 bus 5 p_mw 10\n";
  out.close();
  return at("scenario.cfg");
}

}  // namespace tdcosim::scenario
