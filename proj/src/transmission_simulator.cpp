#include "tdcosim/transmission/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::transmission {

namespace {

constexpr double kNetworkTol = 1e-10;  // pu voltage change between sweeps
constexpr int kNetworkMaxIter = 80;

Eigen::MatrixXcd build_ybus(const TransmissionSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : sys.branches) {
    const auto f = static_cast<Eigen::Index>(sys.bus_index(br.from));
    const auto t = static_cast<Eigen::Index>(sys.bus_index(br.to));
    const Complex ys = 1.0 / Complex(br.r_pu, br.x_pu);
    const Complex ysh(0.0, br.b_pu / 2.0);
    y(f, f) += ys + ysh;
    y(t, t) += ys + ysh;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  return y;
}

}  // namespace

PowerFlowResult solve_power_flow(const TransmissionSystem& sys,
                                 const std::vector<Complex>& bus_loads_pu,
                                 double tol_pu, int max_iter) {
  const std::size_t n = sys.buses.size();
  if (bus_loads_pu.size() != n) {
    throw ConfigError("power flow: load vector size does not match bus count");
  }
  const Eigen::MatrixXcd y = build_ybus(sys);
  const Eigen::MatrixXd g = y.real(), b = y.imag();

  // Unknown layout: angles for every non-slack bus, then magnitudes for PQ.
  std::vector<int> ang_pos(n, -1), vm_pos(n, -1);
  std::vector<std::size_t> ang_bus, vm_bus;
  for (std::size_t i = 0; i < n; ++i) {
    if (sys.buses[i].type != BusType::slack) {
      ang_pos[i] = static_cast<int>(ang_bus.size());
      ang_bus.push_back(i);
    }
    if (sys.buses[i].type == BusType::pq) {
      vm_pos[i] = static_cast<int>(vm_bus.size());
      vm_bus.push_back(i);
    }
  }
  const std::size_t na = ang_bus.size(), nv = vm_bus.size(), m = na + nv;

  std::vector<double> vm(n, 1.0), va(n, 0.0), p_spec(n, 0.0), q_spec(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& bus = sys.buses[i];
    if (bus.type != BusType::pq) vm[i] = bus.vm_setpoint;
    if (bus.type == BusType::slack) va[i] = bus.va_setpoint_deg * M_PI / 180.0;
    p_spec[i] -= bus_loads_pu[i].real();
    q_spec[i] -= bus_loads_pu[i].imag();
  }
  for (const auto& gen : sys.generators) {
    const auto i = static_cast<std::size_t>(sys.bus_index(gen.bus));
    if (sys.buses[i].type != BusType::slack) p_spec[i] += gen.p_sched_mw / sys.base_mva;
  }

  std::vector<double> p_calc(n), q_calc(n);
  auto compute_injections = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double p = 0.0, q = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double th = va[i] - va[j];
        const double gij = g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double bij = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        p += vm[j] * (gij * std::cos(th) + bij * std::sin(th));
        q += vm[j] * (gij * std::sin(th) - bij * std::cos(th));
      }
      p_calc[i] = vm[i] * p;
      q_calc[i] = vm[i] * q;
    }
  };

  PowerFlowResult res;
  Eigen::VectorXd f(static_cast<Eigen::Index>(m));
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));

  for (int it = 0; it < max_iter; ++it) {
    compute_injections();
    double worst = 0.0;
    std::size_t worst_bus = 0;
    for (std::size_t k = 0; k < na; ++k) {
      const std::size_t i = ang_bus[k];
      f(static_cast<Eigen::Index>(k)) = p_spec[i] - p_calc[i];
      if (std::abs(f(static_cast<Eigen::Index>(k))) > worst) {
        worst = std::abs(f(static_cast<Eigen::Index>(k)));
        worst_bus = i;
      }
    }
    for (std::size_t k = 0; k < nv; ++k) {
      const std::size_t i = vm_bus[k];
      f(static_cast<Eigen::Index>(na + k)) = q_spec[i] - q_calc[i];
      if (std::abs(f(static_cast<Eigen::Index>(na + k))) > worst) {
        worst = std::abs(f(static_cast<Eigen::Index>(na + k)));
        worst_bus = i;
      }
    }
    res.iterations = it;
    res.max_mismatch_pu = worst;
    if (!std::isfinite(worst)) {
      throw SolveError("power flow diverged (non-finite mismatch) at bus " +
                       std::to_string(sys.buses[worst_bus].id));
    }
    if (worst < tol_pu) {
      res.v.resize(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        res.v(static_cast<Eigen::Index>(i)) = std::polar(vm[i], va[i]);
      }
      for (const auto& gen : sys.generators) {
        const auto i = static_cast<std::size_t>(sys.bus_index(gen.bus));
        const Complex s_inj(p_calc[i], q_calc[i]);
        res.gen_s_pu.push_back(s_inj + bus_loads_pu[i]);
      }
      return res;
    }

    jac.setZero();
    auto gij = [&](std::size_t i, std::size_t j) {
      return g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    auto bij = [&](std::size_t i, std::size_t j) {
      return b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    for (std::size_t r = 0; r < na; ++r) {
      const std::size_t i = ang_bus[r];
      for (std::size_t j = 0; j < n; ++j) {
        const double th = va[i] - va[j];
        if (ang_pos[j] >= 0) {
          const auto c = static_cast<Eigen::Index>(ang_pos[j]);
          if (i == j) {
            jac(static_cast<Eigen::Index>(r), c) = -q_calc[i] - bij(i, i) * vm[i] * vm[i];
          } else {
            jac(static_cast<Eigen::Index>(r), c) =
                vm[i] * vm[j] * (gij(i, j) * std::sin(th) - bij(i, j) * std::cos(th));
          }
        }
        if (vm_pos[j] >= 0) {
          const auto c = static_cast<Eigen::Index>(na) + vm_pos[j];
          if (i == j) {
            jac(static_cast<Eigen::Index>(r), c) = p_calc[i] / vm[i] + gij(i, i) * vm[i];
          } else {
            jac(static_cast<Eigen::Index>(r), c) =
                vm[i] * (gij(i, j) * std::cos(th) + bij(i, j) * std::sin(th));
          }
        }
      }
    }
    for (std::size_t r = 0; r < nv; ++r) {
      const std::size_t i = vm_bus[r];
      for (std::size_t j = 0; j < n; ++j) {
        const double th = va[i] - va[j];
        if (ang_pos[j] >= 0) {
          const auto c = static_cast<Eigen::Index>(ang_pos[j]);
          if (i == j) {
            jac(static_cast<Eigen::Index>(na + r), c) = p_calc[i] - gij(i, i) * vm[i] * vm[i];
          } else {
            jac(static_cast<Eigen::Index>(na + r), c) =
                -vm[i] * vm[j] * (gij(i, j) * std::cos(th) + bij(i, j) * std::sin(th));
          }
        }
        if (vm_pos[j] >= 0) {
          const auto c = static_cast<Eigen::Index>(na) + vm_pos[j];
          if (i == j) {
            jac(static_cast<Eigen::Index>(na + r), c) = q_calc[i] / vm[i] - bij(i, i) * vm[i];
          } else {
            jac(static_cast<Eigen::Index>(na + r), c) =
                vm[i] * (gij(i, j) * std::sin(th) - bij(i, j) * std::cos(th));
          }
        }
      }
    }

    const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    if (!dx.allFinite()) {
      throw SolveError("power flow diverged (singular Jacobian) near bus " +
                       std::to_string(sys.buses[worst_bus].id));
    }
    for (std::size_t k = 0; k < na; ++k) va[ang_bus[k]] += dx(static_cast<Eigen::Index>(k));
    for (std::size_t k = 0; k < nv; ++k) {
      vm[vm_bus[k]] += dx(static_cast<Eigen::Index>(na + k));
      if (vm[vm_bus[k]] < 0.05) vm[vm_bus[k]] = 0.05;
    }
  }

  compute_injections();
  double worst = 0.0;
  std::size_t worst_bus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = sys.buses[i].type == BusType::slack ? 0.0 : std::abs(p_spec[i] - p_calc[i]);
    if (dp > worst) {
      worst = dp;
      worst_bus = i;
    }
  }
  char msg[160];
  std::snprintf(msg, sizeof msg,
                "power flow did not converge in %d iterations; worst mismatch %.3g pu at bus %d",
                max_iter, worst, sys.buses[worst_bus].id);
  throw SolveError(msg);
}

Simulator::Simulator(TransmissionSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  const double base = sys_.base_mva;
  for (const auto& g : sys_.generators) {
    Machine m;
    const double scale = g.mva / base;  // machine base -> system base
    m.h_sys = g.h_s * scale;
    m.d_sys = g.d_pu * scale;
    m.inv_r_sys = (1.0 / g.r_droop) * scale;
    m.xdp_sys = g.xdp_pu / scale;
    m.tg_s = g.tg_s;
    m.tt_s = g.tt_s;
    m.agc = g.agc;
    m.bus_idx = sys_.bus_index(g.bus);
    machines_.push_back(m);
  }
  bus_load_pu_.resize(sys_.buses.size());
  for (std::size_t i = 0; i < sys_.buses.size(); ++i) {
    bus_load_pu_[i] = Complex(sys_.buses[i].p_load_mw, sys_.buses[i].q_load_mvar) / base;
  }
  build_network();
  const std::size_t ng = machines_.size();
  for (State* s : {&state_, &k1_, &k2_, &k3_, &k4_, &stage_}) {
    s->delta.assign(ng, 0.0);
    s->domega.assign(ng, 0.0);
    s->valve.assign(ng, 0.0);
    s->pm.assign(ng, 0.0);
  }
  pe_.assign(ng, 0.0);
  u_pu_.assign(ng, 0.0);
  v_ = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(sys_.buses.size()));
}

void Simulator::build_network() {
  y_aug_ = build_ybus(sys_);
  for (const auto& m : machines_) {
    y_aug_(m.bus_idx, m.bus_idx) += 1.0 / Complex(0.0, m.xdp_sys);
  }
  lu_.compute(y_aug_);
  i_work_.resize(y_aug_.rows());
  v_work_.resize(y_aug_.rows());
}

void Simulator::set_bus_load(int bus_id, Complex s_mva) {
  const int i = sys_.bus_index(bus_id);
  if (i < 0) throw ConfigError("unknown bus " + std::to_string(bus_id));
  bus_load_pu_[static_cast<std::size_t>(i)] = s_mva / sys_.base_mva;
  network_fresh_ = false;
}

Complex Simulator::bus_load_mva(int bus_id) const {
  const int i = sys_.bus_index(bus_id);
  if (i < 0) throw ConfigError("unknown bus " + std::to_string(bus_id));
  return bus_load_pu_[static_cast<std::size_t>(i)] * sys_.base_mva;
}

void Simulator::resolve_network() {
  if (!initialized_) throw ConfigError("simulator not initialized");
  if (network_fresh_) return;
  solve_network(state_.delta, pe_);
  network_fresh_ = true;
}

void Simulator::solve_network(const std::vector<double>& delta, std::vector<double>& pe_out) {
  const auto n = v_.size();
  for (int it = 0; it < kNetworkMaxIter; ++it) {
    i_work_.setZero();
    for (std::size_t k = 0; k < machines_.size(); ++k) {
      const Machine& m = machines_[k];
      const Complex e = std::polar(m.emag, delta[k]);
      i_work_(m.bus_idx) += e / Complex(0.0, m.xdp_sys);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex s = bus_load_pu_[static_cast<std::size_t>(i)];
      if (s != Complex(0.0, 0.0)) {
        const Complex vi = v_(i);
        if (std::abs(vi) < 1e-6) {
          throw SolveError("network solve collapsed at bus " +
                           std::to_string(sys_.buses[static_cast<std::size_t>(i)].id) +
                           " (voltage near zero)");
        }
        i_work_(i) -= std::conj(s / vi);
      }
    }
    v_work_ = lu_.solve(i_work_);
    double err = 0.0;
    Eigen::Index worst = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = std::abs(v_work_(i) - v_(i));
      if (d > err) {
        err = d;
        worst = i;
      }
    }
    v_ = v_work_;
    if (err < kNetworkTol) {
      for (std::size_t k = 0; k < machines_.size(); ++k) {
        const Machine& m = machines_[k];
        const Complex e = std::polar(m.emag, delta[k]);
        const Complex ig = (e - v_(m.bus_idx)) / Complex(0.0, m.xdp_sys);
        pe_out[k] = (e * std::conj(ig)).real();
      }
      return;
    }
    if (!v_.allFinite()) {
      throw SolveError("network solve diverged at bus " +
                       std::to_string(sys_.buses[static_cast<std::size_t>(worst)].id));
    }
  }
  throw SolveError("network solve did not converge within " +
                   std::to_string(kNetworkMaxIter) + " iterations");
}

void Simulator::derivatives(const State& s, const std::vector<double>& u_pu, State& ds,
                            bool reuse_network) {
  if (!reuse_network) solve_network(s.delta, pe_);
  const double w_s = 2.0 * M_PI * sys_.f_nominal_hz;
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    const Machine& m = machines_[k];
    const double target = m.p_ref + u_pu[k] - m.inv_r_sys * s.domega[k];
    const double valve = m.tg_s > 0.0 ? s.valve[k] : target;
    const double pm = m.tt_s > 0.0 ? s.pm[k] : valve;
    ds.delta[k] = w_s * s.domega[k];
    ds.domega[k] = (pm - pe_[k] - m.d_sys * s.domega[k]) / (2.0 * m.h_sys);
    ds.valve[k] = m.tg_s > 0.0 ? (target - s.valve[k]) / m.tg_s : 0.0;
    ds.pm[k] = m.tt_s > 0.0 ? (valve - s.pm[k]) / m.tt_s : 0.0;
  }
}

void Simulator::enforce_algebraic(State& s, const std::vector<double>& u_pu) {
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    const Machine& m = machines_[k];
    if (m.tg_s <= 0.0) s.valve[k] = m.p_ref + u_pu[k] - m.inv_r_sys * s.domega[k];
    if (m.tt_s <= 0.0) s.pm[k] = s.valve[k];
  }
}

void Simulator::init_steady_state() {
  const PowerFlowResult pf = solve_power_flow(sys_, bus_load_pu_);
  v_ = pf.v;
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    Machine& m = machines_[k];
    const Complex vb = pf.v(m.bus_idx);
    const Complex s = pf.gen_s_pu[k];
    const Complex ig = std::conj(s / vb);
    const Complex e = vb + Complex(0.0, m.xdp_sys) * ig;
    m.emag = std::abs(e);
    state_.delta[k] = std::arg(e);
    state_.domega[k] = 0.0;
  }
  // Anchor the mechanical side to the algebraic solve actually used during
  // integration, so the initial point is an exact fixed point of step().
  solve_network(state_.delta, pe_);
  network_fresh_ = true;
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    machines_[k].p_ref = pe_[k];
    state_.valve[k] = pe_[k];
    state_.pm[k] = pe_[k];
  }
  t_s_ = 0.0;
  initialized_ = true;
  lock_tie_schedule();
}

void Simulator::step(double dt_s, const std::vector<double>& agc_mw) {
  if (!initialized_) throw ConfigError("simulator not initialized");
  if (!(dt_s > 0.0)) throw ConfigError("dt must be positive");
  const std::size_t ng = machines_.size();
  if (!agc_mw.empty() && agc_mw.size() != ng) {
    throw ConfigError("AGC setpoint vector size does not match generator count");
  }
  for (std::size_t k = 0; k < ng; ++k) {
    u_pu_[k] = (!agc_mw.empty() && machines_[k].agc) ? agc_mw[k] / sys_.base_mva : 0.0;
  }

  auto blend = [&](State& out, const State& a, double h, const State& d) {
    for (std::size_t k = 0; k < ng; ++k) {
      out.delta[k] = a.delta[k] + h * d.delta[k];
      out.domega[k] = a.domega[k] + h * d.domega[k];
      out.valve[k] = a.valve[k] + h * d.valve[k];
      out.pm[k] = a.pm[k] + h * d.pm[k];
    }
  };

  derivatives(state_, u_pu_, k1_, network_fresh_);
  blend(stage_, state_, dt_s / 2.0, k1_);
  derivatives(stage_, u_pu_, k2_);
  blend(stage_, state_, dt_s / 2.0, k2_);
  derivatives(stage_, u_pu_, k3_);
  blend(stage_, state_, dt_s, k3_);
  derivatives(stage_, u_pu_, k4_);
  for (std::size_t k = 0; k < ng; ++k) {
    state_.delta[k] += dt_s / 6.0 * (k1_.delta[k] + 2 * k2_.delta[k] + 2 * k3_.delta[k] + k4_.delta[k]);
    state_.domega[k] += dt_s / 6.0 * (k1_.domega[k] + 2 * k2_.domega[k] + 2 * k3_.domega[k] + k4_.domega[k]);
    state_.valve[k] += dt_s / 6.0 * (k1_.valve[k] + 2 * k2_.valve[k] + 2 * k3_.valve[k] + k4_.valve[k]);
    state_.pm[k] += dt_s / 6.0 * (k1_.pm[k] + 2 * k2_.pm[k] + 2 * k3_.pm[k] + k4_.pm[k]);
  }
  enforce_algebraic(state_, u_pu_);
  solve_network(state_.delta, pe_);
  network_fresh_ = true;
  t_s_ += dt_s;

  for (std::size_t k = 0; k < ng; ++k) {
    if (std::abs(state_.domega[k]) > sys_.trip_delta_omega_pu) {
      char msg[192];
      std::snprintf(msg, sizeof msg,
                    "speed deviation %.4g pu at generator %s exceeds the %.4g pu trip "
                    "threshold at t=%.3f s; simulation aborted",
                    state_.domega[k], sys_.generators[k].id.c_str(),
                    sys_.trip_delta_omega_pu, t_s_);
      throw SolveError(msg);
    }
  }
}

double Simulator::area_frequency_hz(int area) const {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    if (sys_.buses[static_cast<std::size_t>(machines_[k].bus_idx)].area == area) {
      num += machines_[k].h_sys * state_.domega[k];
      den += machines_[k].h_sys;
    }
  }
  if (den <= 0.0) throw ConfigError("area " + std::to_string(area) + " has no generators");
  return num / den * sys_.f_nominal_hz;
}

double Simulator::system_frequency_hz() const {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    num += machines_[k].h_sys * state_.domega[k];
    den += machines_[k].h_sys;
  }
  if (den <= 0.0) throw ConfigError("system has no generators");
  return num / den * sys_.f_nominal_hz;
}

Complex Simulator::bus_voltage(int bus_id) const {
  const int i = sys_.bus_index(bus_id);
  if (i < 0) throw ConfigError("unknown bus " + std::to_string(bus_id));
  return v_(i);
}

double Simulator::tie_flow_mw(int area) const {
  double mw = 0.0;
  for (const auto& br : sys_.branches) {
    const Bus& bf = sys_.bus(br.from);
    const Bus& bt = sys_.bus(br.to);
    if (bf.area == bt.area) continue;
    const Complex vf = v_(sys_.bus_index(br.from));
    const Complex vt = v_(sys_.bus_index(br.to));
    const Complex ys = 1.0 / Complex(br.r_pu, br.x_pu);
    const Complex ysh(0.0, br.b_pu / 2.0);
    if (bf.area == area) {
      mw += (vf * std::conj(ys * (vf - vt) + ysh * vf)).real();
    } else if (bt.area == area) {
      mw += (vt * std::conj(ys * (vt - vf) + ysh * vt)).real();
    }
  }
  return mw * sys_.base_mva;
}

void Simulator::set_tie_schedule(int area, double mw) {
  for (auto& [a, s] : tie_schedule_mw_) {
    if (a == area) {
      s = mw;
      return;
    }
  }
  tie_schedule_mw_.emplace_back(area, mw);
}

void Simulator::lock_tie_schedule() {
  for (int area : sys_.area_ids()) set_tie_schedule(area, tie_flow_mw(area));
}

double Simulator::tie_schedule_mw(int area) const {
  for (const auto& [a, s] : tie_schedule_mw_) {
    if (a == area) return s;
  }
  throw ConfigError("no tie schedule for area " + std::to_string(area));
}

double Simulator::tie_deviation_mw(int area) const {
  return tie_flow_mw(area) - tie_schedule_mw(area);
}

double Simulator::gen_pe_mw(std::size_t i) const { return pe_.at(i) * sys_.base_mva; }
double Simulator::gen_pm_mw(std::size_t i) const { return state_.pm.at(i) * sys_.base_mva; }
double Simulator::gen_delta_rad(std::size_t i) const { return state_.delta.at(i); }
double Simulator::gen_domega_pu(std::size_t i) const { return state_.domega.at(i); }
double Simulator::gen_pref_mw(std::size_t i) const {
  return machines_.at(i).p_ref * sys_.base_mva;
}

double Simulator::total_load_mw() const {
  double p = 0.0;
  for (const auto& s : bus_load_pu_) p += s.real();
  return p * sys_.base_mva;
}

double Simulator::network_loss_mw() const {
  double loss = 0.0;
  for (const auto& br : sys_.branches) {
    const Complex vf = v_(sys_.bus_index(br.from));
    const Complex vt = v_(sys_.bus_index(br.to));
    const Complex ys = 1.0 / Complex(br.r_pu, br.x_pu);
    const Complex i = ys * (vf - vt);
    loss += (std::norm(i) * br.r_pu);
  }
  return loss * sys_.base_mva;
}

}  // namespace tdcosim::transmission
