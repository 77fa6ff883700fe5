#include "tdcosim/cosim/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <vector>

#include "tdcosim/agc/area_controller.hpp"
#include "tdcosim/bess/unit.hpp"
#include "tdcosim/common/errors.hpp"
#include "tdcosim/distribution/solver.hpp"
#include "tdcosim/transmission/simulator.hpp"

namespace tdcosim::cosim {
namespace {

using transmission::Complex;

constexpr double kInitTolPu = 1e-9;
constexpr int kInitMaxRounds = 40;

struct PvRef {
  std::string id;
  double rating_kw = 0.0;
  const scenario::Profile* profile = nullptr;
  double offset_s = 0.0;  // simulation t=0 relative to the profile window
};

struct FeederRuntime {
  const distribution::Feeder* feeder = nullptr;
  int pcc_bus = 0;
  int area = 0;
  const scenario::Profile* load_profile = nullptr;
  double load_offset_s = 0.0;
  std::vector<PvRef> pvs;
  std::vector<std::size_t> unit_idx;  // into the unit vector
  double nominal_p_kw = 0.0;
  double nominal_q_kvar = 0.0;
  Complex static_mva{0.0, 0.0};   // non-feederized load carried by the PCC bus
  Complex applied_mva{0.0, 0.0};  // PCC power last handed to transmission
  distribution::FeederSolution last;
  bool has_solution = false;
};

struct ExchangeOutcome {
  int iterations = 0;
  double mismatch_pu = 0.0;
  bool converged = true;
};

class Coordinator {
public:
  Coordinator(const ScenarioConfig& cfg, const ProgressFn& progress)
      : cfg_(cfg), progress_(progress), sim_(cfg.system) {
    build_runtime();
  }

  RunResult run() {
    RunResult out;
    prepare_bundle();
    const auto& sched = cfg_.schedule;
    const long long total = sched.distribution_steps();
    const int sub = sched.transmission_steps_per_distribution();
    const int per_agc = sched.distribution_steps_per_agc();
    const double dt_dist = sched.dt_distribution_s;
    const double dt_trans = sched.dt_transmission_s;

    try {
      init_boundary();
      double next_progress = 0.0;
      for (long long d = 0; d < total; ++d) {
        const double t = static_cast<double>(d) * dt_dist;
        if (progress_ && t >= next_progress) {
          progress_(t, sched.horizon_s);
          next_progress += 60.0;
        }
        actuate_pending();
        apply_storage(dt_dist);
        activate_disturbances(t);
        const ExchangeOutcome ex = exchange(t);
        if (!ex.converged && cfg_.schedule.tc_max_iterations > 1) {
          warn(t, "coupling iterations hit the cap with boundary mismatch " +
                      format_sci(ex.mismatch_pu) + " pu");
        }
        if (cfg_.agc_enabled && d % per_agc == 0) agc_boundary(t);
        record_row(t, ex);
        for (int k = 0; k < sub; ++k) sim_.step(dt_trans, gen_u_mw_);
      }
      if (progress_) progress_(sched.horizon_s, sched.horizon_s);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    out.bundle = std::move(bundle_);
    return out;
  }

private:
  // ---- setup -------------------------------------------------------------

  void build_runtime() {
    const auto offset_for = [&](const scenario::Profile& p) {
      return static_cast<double>(cfg_.start_clock_s - p.window_start_s);
    };

    units_.reserve(cfg_.roster.size());
    std::map<std::string, std::size_t> feeder_runtime_idx;
    feeders_.reserve(cfg_.feeders.size());
    for (std::size_t i = 0; i < cfg_.feeders.size(); ++i) {
      const auto& f = cfg_.feeders[i];
      const auto& b = cfg_.bindings[i];
      FeederRuntime fr;
      fr.feeder = &f;
      fr.pcc_bus = b.pcc_bus;
      fr.area = cfg_.system.bus(b.pcc_bus).area;
      // The case file's load entry at a PCC bus is the portion served outside
      // the modeled feeder; the feeder head power stacks on top of it.
      fr.static_mva = Complex(cfg_.system.bus(b.pcc_bus).p_load_mw,
                              cfg_.system.bus(b.pcc_bus).q_load_mvar);
      fr.load_profile = cfg_.find_profile(b.load_profile);
      fr.load_offset_s = offset_for(*fr.load_profile);
      for (const auto& pv : f.pv_systems) {
        const auto* p = cfg_.find_profile(pv.profile_id);
        fr.pvs.push_back({pv.id, pv.rating_kw, p, offset_for(*p)});
      }
      fr.nominal_p_kw = f.total_load_kw();
      fr.nominal_q_kvar = f.total_load_kvar();
      feeder_runtime_idx[f.id] = feeders_.size();
      feeders_.push_back(std::move(fr));
    }

    for (const auto& p : cfg_.roster) {
      const std::size_t fi = feeder_runtime_idx.at(p.feeder);
      feeders_[fi].unit_idx.push_back(units_.size());
      unit_feeder_.push_back(fi);
      units_.emplace_back(p);
    }
    unit_actual_kw_.assign(units_.size(), 0.0);
    pending_unit_kw_.assign(units_.size(), 0.0);

    if (cfg_.model == Model::aggregated) build_equivalents();

    gen_u_mw_.assign(cfg_.system.generators.size(), 0.0);
    pending_gen_u_mw_ = gen_u_mw_;

    std::map<std::string, double> factors;
    for (const auto& [gid, f] : cfg_.participation) factors[gid] = f;
    for (int a : cfg_.system.area_ids()) {
      area_ids_.push_back(a);
      const auto* ac = cfg_.find_area(a);
      agc::AreaController::Params cp;
      cp.area_id = a;
      cp.beta_mw_per_hz = ac->beta_mw_per_hz;
      cp.conventional = ac->conventional;
      cp.bess = ac->bess;
      controllers_.emplace(a, agc::AreaController(cp));
      last_interval_[a] = {};
    }
    for (std::size_t gi = 0; gi < cfg_.system.generators.size(); ++gi) {
      const auto& g = cfg_.system.generators[gi];
      if (!g.agc) continue;
      const int a = cfg_.system.bus(g.bus).area;
      agc::Participant p;
      p.id = g.id;
      p.factor = factors.count(g.id) ? factors.at(g.id) : 0.0;
      p.headroom_up_mw = g.headroom_up_mw;
      p.headroom_down_mw = g.headroom_down_mw;
      area_participants_[a].push_back(p);
      area_gen_idx_[a].push_back(gi);
    }
    for (std::size_t u = 0; u < units_.size(); ++u) {
      area_unit_idx_[feeders_[unit_feeder_[u]].area].push_back(u);
    }
    for (std::size_t e = 0; e < eq_units_.size(); ++e) {
      area_eq_idx_[feeders_[eq_feeder_[e]].area].push_back(e);
    }
  }

  /// One believed storage unit per feeder: summed ratings, energy-weighted
  /// SoC state and limits. The scheduler sees only these in aggregated runs.
  void build_equivalents() {
    pending_eq_kw_.clear();
    for (std::size_t fi = 0; fi < feeders_.size(); ++fi) {
      const auto& idx = feeders_[fi].unit_idx;
      if (idx.empty()) continue;
      bess::BessUnit::Params p;
      p.id = "equiv-" + feeders_[fi].feeder->id;
      p.feeder = feeders_[fi].feeder->id;
      double e_sum = 0.0, p_sum = 0.0;
      double soc0 = 0.0, lo = 0.0, hi = 0.0, eta_c = 0.0, eta_d = 0.0;
      for (std::size_t u : idx) {
        const auto& q = units_[u].params();
        p_sum += q.p_rating_kw;
        e_sum += q.e_rating_kwh;
        soc0 += q.soc_initial * q.e_rating_kwh;
        lo += q.soc_min * q.e_rating_kwh;
        hi += q.soc_max * q.e_rating_kwh;
        eta_c += q.eta_charge * q.e_rating_kwh;
        eta_d += q.eta_discharge * q.e_rating_kwh;
      }
      p.p_rating_kw = p_sum;
      p.e_rating_kwh = e_sum;
      p.soc_initial = soc0 / e_sum;
      p.soc_min = lo / e_sum;
      p.soc_max = hi / e_sum;
      p.eta_charge = eta_c / e_sum;
      p.eta_discharge = eta_d / e_sum;
      eq_feeder_.push_back(fi);
      eq_units_.emplace_back(p);
      pending_eq_kw_.push_back(0.0);
    }
  }

  void prepare_bundle() {
    bundle_.scenario_name = cfg_.name;
    bundle_.coupling = coupling_name(cfg_.coupling);
    bundle_.model = model_name(cfg_.model);
    bundle_.seed = cfg_.seed;
    bundle_.dt_s = cfg_.schedule.dt_distribution_s;
    bundle_.area_ids = area_ids_;
    const std::size_t na = area_ids_.size();
    bundle_.freq_hz.resize(na);
    bundle_.tie_dev_mw.resize(na);
    bundle_.ace_mw.resize(na);
    bundle_.ace_b_mw.resize(na);
    bundle_.ace_g_mw.resize(na);
    bundle_.cmd_conv_mw.resize(na);
    bundle_.cmd_bess_mw.resize(na);
    for (const auto& fr : feeders_) {
      bundle_.feeder_ids.push_back(fr.feeder->id);
      bundle_.pcc_buses.push_back(fr.pcc_bus);
    }
    bundle_.pcc_p_mw.resize(feeders_.size());
    bundle_.pcc_q_mvar.resize(feeders_.size());
    if (cfg_.model == Model::cosim) {
      bundle_.feeder_vmin_pu.resize(feeders_.size());
      bundle_.feeder_vmax_pu.resize(feeders_.size());
    }
    for (const auto& u : units_) bundle_.unit_ids.push_back(u.id());
    bundle_.bess_kw.resize(units_.size());
    bundle_.bess_soc.resize(units_.size());
  }

  // ---- per-step pieces ----------------------------------------------------

  void actuate_pending() {
    if (!have_pending_) return;
    gen_u_mw_ = pending_gen_u_mw_;
    for (std::size_t u = 0; u < units_.size(); ++u) {
      units_[u].set_setpoint_kw(pending_unit_kw_[u]);
    }
    for (std::size_t e = 0; e < eq_units_.size(); ++e) {
      eq_units_[e].set_setpoint_kw(pending_eq_kw_[e]);
    }
    have_pending_ = false;
  }

  void apply_storage(double dt_s) {
    for (std::size_t u = 0; u < units_.size(); ++u) {
      unit_actual_kw_[u] = units_[u].apply_setpoint(units_[u].setpoint_kw(), dt_s);
    }
    // Believed trajectory: the aggregated scheduler integrates its command
    // against the equivalent unit, not the real fleet.
    for (auto& eq : eq_units_) eq.apply_setpoint(eq.setpoint_kw(), dt_s);
  }

  void activate_disturbances(double t) {
    while (next_disturbance_ < sorted_disturbances_.size() &&
           sorted_disturbances_[next_disturbance_].t_s <= t + 1e-9) {
      const auto& d = sorted_disturbances_[next_disturbance_++];
      extra_mva_[d.bus] += Complex(d.dp_mw, d.dq_mvar);
      if (!pcc_set_.count(d.bus)) {
        const auto& bus = cfg_.system.bus(d.bus);
        sim_.set_bus_load(d.bus,
                          Complex(bus.p_load_mw, bus.q_load_mvar) + extra_mva_[d.bus]);
      }
    }
  }

  Complex extra_at(int bus) const {
    auto it = extra_mva_.find(bus);
    return it == extra_mva_.end() ? Complex(0.0, 0.0) : it->second;
  }

  double load_multiplier(const FeederRuntime& fr, double t) const {
    return fr.load_profile->value_at(fr.load_offset_s + t);
  }

  std::map<std::string, Complex> injections_kva(const FeederRuntime& fr, double t) const {
    std::map<std::string, Complex> inj;
    for (const auto& pv : fr.pvs) {
      inj[pv.id] = Complex(pv.rating_kw * pv.profile->value_at(pv.offset_s + t), 0.0);
    }
    for (std::size_t u : fr.unit_idx) {
      inj[units_[u].id()] = Complex(unit_actual_kw_[u], 0.0);
    }
    return inj;
  }

  /// Net PCC demand of the feeder with the network discarded: loads minus
  /// generation, no losses, no voltage dependence.
  Complex lumped_mva(const FeederRuntime& fr, double t) const {
    const double mult = load_multiplier(fr, t);
    double p_kw = fr.nominal_p_kw * mult;
    const double q_kvar = fr.nominal_q_kvar * mult;
    for (const auto& pv : fr.pvs) {
      p_kw -= pv.rating_kw * pv.profile->value_at(pv.offset_s + t);
    }
    for (std::size_t u : fr.unit_idx) p_kw -= unit_actual_kw_[u];
    return Complex(p_kw, q_kvar) / 1000.0;
  }

  ExchangeOutcome exchange(double t) {
    ExchangeOutcome out;
    if (cfg_.model == Model::aggregated) {
      double worst = 0.0;
      for (auto& fr : feeders_) {
        const Complex s = lumped_mva(fr, t);
        worst = std::max(worst, std::abs(s - fr.applied_mva) / cfg_.system.base_mva);
        fr.applied_mva = s;
        sim_.set_bus_load(fr.pcc_bus, s + fr.static_mva + extra_at(fr.pcc_bus));
      }
      sim_.resolve_network();
      out.iterations = 1;
      out.mismatch_pu = worst;
      return out;  // lumped power ignores voltage, so one pass is exact
    }

    const bool tc = cfg_.coupling == Coupling::tc;
    const int cap = tc ? cfg_.schedule.tc_max_iterations : 1;
    const double tol = cfg_.schedule.tc_tolerance_pu;
    double worst = 0.0;
    for (int it = 1; it <= cap; ++it) {
      worst = 0.0;
      for (auto& fr : feeders_) {
        const Complex v = sim_.bus_voltage(fr.pcc_bus);
        fr.last = distribution::solve_feeder(*fr.feeder, v, injections_kva(fr, t),
                                             load_multiplier(fr, t));
        fr.has_solution = true;
        const Complex s = fr.last.head_s_kva / 1000.0;
        worst = std::max(worst, std::abs(s - fr.applied_mva) / cfg_.system.base_mva);
        fr.applied_mva = s;
        sim_.set_bus_load(fr.pcc_bus, s + fr.static_mva + extra_at(fr.pcc_bus));
      }
      sim_.resolve_network();
      out.iterations = it;
      out.mismatch_pu = worst;
      if (tc && worst < tol) return out;
    }
    out.converged = !tc || worst < tol || cap == 1;
    return out;
  }

  void agc_boundary(double t) {
    const bess::DaaOptions opt{cfg_.daa_include_efficiency};
    for (int a : area_ids_) {
      agc::AreaController::Measurement m;
      m.df_hz = sim_.area_frequency_hz(a);
      m.dp_tie_mw = sim_.tie_deviation_mw(a);

      const bool agg = cfg_.model == Model::aggregated;
      const auto& fleet_idx = agg ? area_eq_idx_[a] : area_unit_idx_[a];
      for (std::size_t k : fleet_idx) {
        const auto d = (agg ? eq_units_[k] : units_[k]).daa(opt);
        m.daa_discharge_mw += d.discharge_kw / 1000.0;
        m.daa_charge_mw += d.charge_kw / 1000.0;
      }
      for (std::size_t gi : area_gen_idx_[a]) {
        const auto& g = cfg_.system.generators[gi];
        m.aa_raise_mw += std::max(0.0, g.headroom_up_mw - gen_u_mw_[gi]);
        m.aa_lower_mw += std::max(0.0, g.headroom_down_mw + gen_u_mw_[gi]);
      }

      const auto iv = controllers_.at(a).step(m, cfg_.schedule.dt_agc_s);
      last_interval_[a] = iv;
      if (iv.regulation_exhausted) {
        if (!exhausted_[a]) {
          warn(t, "area " + std::to_string(a) + ": no regulation capability in the " +
                      std::string(iv.ace_mw >= 0.0 ? "lower" : "raise") + " direction");
        }
        exhausted_[a] = true;
      } else {
        exhausted_[a] = false;
      }

      const auto cd = agc::dispatch_conventional(iv.command_conv_mw, area_participants_[a]);
      const auto& gidx = area_gen_idx_[a];
      for (std::size_t k = 0; k < gidx.size(); ++k) {
        pending_gen_u_mw_[gidx[k]] = cd.setpoints_mw[k];
      }
      if (cd.saturated && !saturated_[a]) {
        warn(t, "area " + std::to_string(a) + ": conventional units at their headroom limits");
      }
      saturated_[a] = cd.saturated;

      dispatch_storage(a, iv.command_bess_mw * 1000.0, opt, t);
    }
    have_pending_ = true;
  }

  void dispatch_storage(int area, double cmd_kw, const bess::DaaOptions& opt, double t) {
    const bool agg = cfg_.model == Model::aggregated;
    const auto& fleet_idx = agg ? area_eq_idx_[area] : area_unit_idx_[area];
    if (fleet_idx.empty()) return;

    std::vector<double> avail(fleet_idx.size());
    const bool discharge = cmd_kw < 0.0;  // negative command raises output
    for (std::size_t k = 0; k < fleet_idx.size(); ++k) {
      const auto d = (agg ? eq_units_[fleet_idx[k]] : units_[fleet_idx[k]]).daa(opt);
      avail[k] = discharge ? d.discharge_kw : d.charge_kw;
    }
    const auto bd = agc::dispatch_bess(cmd_kw, avail);
    if (bd.exhausted && !fleet_exhausted_[area]) {
      warn(t, "area " + std::to_string(area) + ": storage fleet cannot serve its share");
    }
    fleet_exhausted_[area] = bd.exhausted;

    for (std::size_t k = 0; k < fleet_idx.size(); ++k) {
      if (!agg) {
        pending_unit_kw_[fleet_idx[k]] = bd.setpoints_kw[k];
        continue;
      }
      // Scheduler output is per feeder; the real units take rating shares.
      const std::size_t e = fleet_idx[k];
      pending_eq_kw_[e] = bd.setpoints_kw[k];
      const auto& fr = feeders_[eq_feeder_[e]];
      const double p_total = eq_units_[e].params().p_rating_kw;
      for (std::size_t u : fr.unit_idx) {
        pending_unit_kw_[u] =
            p_total > 0.0 ? bd.setpoints_kw[k] * units_[u].params().p_rating_kw / p_total : 0.0;
      }
    }
  }

  void record_row(double t, const ExchangeOutcome& ex) {
    bundle_.t_s.push_back(t);
    for (std::size_t ai = 0; ai < area_ids_.size(); ++ai) {
      const int a = area_ids_[ai];
      const double df = sim_.area_frequency_hz(a);
      const double dtie = sim_.tie_deviation_mw(a);
      bundle_.freq_hz[ai].push_back(df);
      bundle_.tie_dev_mw[ai].push_back(dtie);
      bundle_.ace_mw[ai].push_back(
          agc::compute_ace(controllers_.at(a).params().beta_mw_per_hz, df, dtie));
      const auto& iv = last_interval_.at(a);
      bundle_.ace_b_mw[ai].push_back(iv.ace_bess_mw);
      bundle_.ace_g_mw[ai].push_back(iv.ace_conv_mw);
      bundle_.cmd_conv_mw[ai].push_back(iv.command_conv_mw);
      bundle_.cmd_bess_mw[ai].push_back(iv.command_bess_mw);
    }
    bundle_.freq_coi_hz.push_back(sim_.system_frequency_hz());

    for (std::size_t fi = 0; fi < feeders_.size(); ++fi) {
      const auto& fr = feeders_[fi];
      bundle_.pcc_p_mw[fi].push_back(fr.applied_mva.real());
      bundle_.pcc_q_mvar[fi].push_back(fr.applied_mva.imag());
      if (cfg_.model != Model::cosim || !fr.has_solution) continue;
      double vmin = 10.0, vmax = 0.0;
      const auto& nodes = fr.feeder->nodes;
      for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        for (int ph = 0; ph < 3; ++ph) {
          if (!(nodes[ni].phases & (1u << ph))) continue;
          const double v = std::abs(fr.last.v_pu[ni][static_cast<std::size_t>(ph)]);
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
      }
      bundle_.feeder_vmin_pu[fi].push_back(vmin);
      bundle_.feeder_vmax_pu[fi].push_back(vmax);
      for (const auto& v : distribution::check_voltage_limits(*fr.feeder, fr.last)) {
        bundle_.violations.push_back({t, fr.feeder->id, v.node, v.phase, v.v_pu});
      }
    }

    for (std::size_t u = 0; u < units_.size(); ++u) {
      bundle_.bess_kw[u].push_back(unit_actual_kw_[u]);
      bundle_.bess_soc[u].push_back(units_[u].soc());
    }
    bundle_.exchange_iterations.push_back(ex.iterations);
    bundle_.exchange_mismatch_pu.push_back(ex.mismatch_pu);
  }

  /// Fixed point between the initial power flow and the feeder solutions so
  /// t=0 starts balanced: machines at equilibrium, boundary powers agreed.
  void init_boundary() {
    sorted_disturbances_ = cfg_.disturbances;
    std::stable_sort(sorted_disturbances_.begin(), sorted_disturbances_.end(),
                     [](const Disturbance& x, const Disturbance& y) { return x.t_s < y.t_s; });
    for (const auto& fr : feeders_) pcc_set_.insert(fr.pcc_bus);
    activate_disturbances(0.0);  // anything scheduled at or before t=0

    const bool agg = cfg_.model == Model::aggregated;
    for (int round = 0; round <= kInitMaxRounds; ++round) {
      double worst = 0.0;
      for (auto& fr : feeders_) {
        const Complex v = round == 0 ? Complex(1.0, 0.0) : sim_.bus_voltage(fr.pcc_bus);
        Complex s;
        if (agg) {
          s = lumped_mva(fr, 0.0);
        } else {
          fr.last = distribution::solve_feeder(*fr.feeder, v, injections_kva(fr, 0.0),
                                               load_multiplier(fr, 0.0));
          fr.has_solution = true;
          s = fr.last.head_s_kva / 1000.0;
        }
        worst = std::max(worst, std::abs(s - fr.applied_mva) / cfg_.system.base_mva);
        fr.applied_mva = s;
        sim_.set_bus_load(fr.pcc_bus, s + fr.static_mva + extra_at(fr.pcc_bus));
      }
      sim_.init_steady_state();
      if (round > 0 && worst < kInitTolPu) break;
      if (round == kInitMaxRounds) {
        throw SolveError("transmission and feeder boundary powers did not agree after " +
                         std::to_string(kInitMaxRounds) + " initialization rounds");
      }
    }
    if (!cfg_.tie_schedule_auto) {
      for (const auto& [a, mw] : cfg_.tie_schedule_mw) sim_.set_tie_schedule(a, mw);
    }
  }

  void warn(double t, const std::string& message) {
    bundle_.warnings.push_back({t, message});
  }

  static std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  const ScenarioConfig& cfg_;
  ProgressFn progress_;
  transmission::Simulator sim_;
  std::vector<FeederRuntime> feeders_;

  std::vector<bess::BessUnit> units_;
  std::vector<std::size_t> unit_feeder_;
  std::vector<double> unit_actual_kw_;
  std::vector<bess::BessUnit> eq_units_;   // aggregated model only
  std::vector<std::size_t> eq_feeder_;

  std::vector<int> area_ids_;
  std::map<int, agc::AreaController> controllers_;
  std::map<int, std::vector<agc::Participant>> area_participants_;
  std::map<int, std::vector<std::size_t>> area_gen_idx_;
  std::map<int, std::vector<std::size_t>> area_unit_idx_;
  std::map<int, std::vector<std::size_t>> area_eq_idx_;
  std::map<int, agc::AreaController::Interval> last_interval_;
  std::map<int, bool> exhausted_, saturated_, fleet_exhausted_;

  std::vector<double> gen_u_mw_, pending_gen_u_mw_;
  std::vector<double> pending_unit_kw_, pending_eq_kw_;
  bool have_pending_ = false;

  std::vector<Disturbance> sorted_disturbances_;
  std::size_t next_disturbance_ = 0;
  std::map<int, Complex> extra_mva_;
  std::set<int> pcc_set_;

  metrics::MetricsBundle bundle_;
};

}  // namespace

RunResult run_simulation(const ScenarioConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  Coordinator c(cfg, progress);
  return c.run();
}

}  // namespace tdcosim::cosim
