#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "tdcosim/transmission/system.hpp"

namespace tdcosim::transmission {

using Complex = std::complex<double>;

struct PowerFlowResult {
  Eigen::VectorXcd v;               // bus voltages, system bus order
  std::vector<Complex> gen_s_pu;    // per-generator injection, system base
  int iterations = 0;
  double max_mismatch_pu = 0.0;
};

/// Newton-Raphson power flow in polar form. bus_loads_pu is per system bus
/// order (positive = consumption). Throws SolveError naming the worst
/// mismatch bus on divergence.
PowerFlowResult solve_power_flow(const TransmissionSystem& sys,
                                 const std::vector<Complex>& bus_loads_pu,
                                 double tol_pu = 1e-10, int max_iter = 30);

/// Multi-machine dynamic simulator: classical machines (constant EMF behind
/// the transient reactance) with first-order governor and turbine, explicit
/// RK4, and a current-injection network solve with prefactored admittance.
class Simulator {
public:
  explicit Simulator(TransmissionSystem sys);

  const TransmissionSystem& system() const { return sys_; }

  /// Loads in MW/Mvar. Replaces the bus's current load (PCC refresh and
  /// disturbance steps both land here).
  void set_bus_load(int bus_id, Complex s_mva);
  Complex bus_load_mva(int bus_id) const;

  /// Solves the power flow at the current loads and places every machine at
  /// its equilibrium (all rotor accelerations zero, Pm = Pe).
  void init_steady_state();
  bool initialized() const { return initialized_; }

  /// Advances one RK4 step. agc_mw holds per-generator secondary setpoints
  /// aligned with system().generators; empty means all zero. Units without
  /// the AGC flag ignore their entry.
  void step(double dt_s, const std::vector<double>& agc_mw = {});

  double t_s() const { return t_s_; }

  /// Re-solves the algebraic network at the current rotor state and loads.
  /// Call after set_bus_load so voltages, flows, and Pe reflect the change.
  void resolve_network();

  /// Inertia-weighted mean speed deviation of the area's machines, in Hz.
  double area_frequency_hz(int area) const;
  /// Same weighting over every machine (center of inertia).
  double system_frequency_hz() const;

  Complex bus_voltage(int bus_id) const;  // pu phasor from the last solve

  /// Net interchange leaving the area over tie branches, MW.
  double tie_flow_mw(int area) const;
  void set_tie_schedule(int area, double mw);
  /// Locks every area's schedule to its current actual interchange.
  void lock_tie_schedule();
  double tie_schedule_mw(int area) const;
  double tie_deviation_mw(int area) const;  // actual - schedule, export-positive

  // Per-generator observability (system().generators order).
  double gen_pe_mw(std::size_t i) const;
  double gen_pm_mw(std::size_t i) const;
  double gen_delta_rad(std::size_t i) const;
  double gen_domega_pu(std::size_t i) const;
  double gen_pref_mw(std::size_t i) const;

  double total_load_mw() const;
  double network_loss_mw() const;  // series + shunt, from the last solve

private:
  struct Machine {
    double h_sys = 0.0;      // 2H on the left side uses this, system base
    double d_sys = 0.0;
    double inv_r_sys = 0.0;  // 1/R, system base
    double xdp_sys = 0.0;
    double tg_s = 0.0;
    double tt_s = 0.0;
    bool agc = false;
    int bus_idx = 0;
    double emag = 0.0;   // internal EMF magnitude, fixed after init
    double p_ref = 0.0;  // governor reference, system pu
  };

  struct State {
    std::vector<double> delta;   // rad
    std::vector<double> domega;  // pu speed deviation
    std::vector<double> valve;   // governor output, pu
    std::vector<double> pm;      // mechanical power, pu
  };

  void build_network();
  /// Solves the algebraic network for the given rotor angles, warm-starting
  /// from v_. Returns electrical power per machine, system pu.
  void solve_network(const std::vector<double>& delta, std::vector<double>& pe_out);
  void derivatives(const State& s, const std::vector<double>& u_pu, State& ds,
                   bool reuse_network = false);
  void enforce_algebraic(State& s, const std::vector<double>& u_pu);

  TransmissionSystem sys_;
  std::vector<Machine> machines_;
  std::vector<Complex> bus_load_pu_;  // current consumption per bus
  Eigen::MatrixXcd y_aug_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  Eigen::VectorXcd v_;       // last solved bus voltages
  Eigen::VectorXcd i_work_;  // injection scratch
  Eigen::VectorXcd v_work_;
  State state_;
  State k1_, k2_, k3_, k4_, stage_;
  std::vector<double> pe_;  // last solved electrical power per machine
  std::vector<double> u_pu_;
  std::vector<std::pair<int, double>> tie_schedule_mw_;  // area -> MW
  double t_s_ = 0.0;
  bool initialized_ = false;
  bool network_fresh_ = false;  // v_/pe_ match state_.delta and current loads
};

}  // namespace tdcosim::transmission
