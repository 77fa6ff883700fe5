#pragma once

#include <complex>
#include <string>
#include <vector>

namespace tdcosim::transmission {

enum class BusType { slack, pv, pq };

struct Bus {
  int id = 0;
  BusType type = BusType::pq;
  int area = 0;
  double base_kv = 0.0;
  bool is_pcc = false;
  double vm_setpoint = 1.0;     // slack and PV buses, pu
  double va_setpoint_deg = 0.0; // slack bus
  double p_load_mw = 0.0;       // static load; PCC buses get this replaced at runtime
  double q_load_mvar = 0.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double b_pu = 0.0;  // total line charging, split half per end
};

struct GeneratorUnit {
  std::string id;
  int bus = 0;
  double mva = 0.0;     // machine base for the per-unit parameters below
  double h_s = 0.0;     // inertia constant, machine base
  double d_pu = 0.0;    // damping, machine base
  double xdp_pu = 0.0;  // transient reactance, machine base
  double r_droop = 0.0; // governor droop, machine base
  double tg_s = 0.0;    // governor time constant; 0 bypasses the lag
  double tt_s = 0.0;    // turbine time constant; 0 bypasses the lag
  double p_sched_mw = 0.0;  // dispatch for non-slack units
  bool agc = false;
  double headroom_up_mw = 0.0;
  double headroom_down_mw = 0.0;
};

struct TransmissionSystem {
  double base_mva = 100.0;
  double f_nominal_hz = 60.0;
  double trip_delta_omega_pu = 0.05;  // |speed deviation| abort threshold

  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<GeneratorUnit> generators;

  int bus_index(int bus_id) const;  // -1 if absent
  const Bus& bus(int bus_id) const;
  std::vector<int> area_ids() const;       // sorted unique
  std::vector<int> pcc_buses() const;      // bus ids
  bool is_tie(const Branch& br) const;     // endpoints in different areas

  /// Connectivity, exactly one slack, generator/bus cross references,
  /// parameter ranges. Throws ConfigError with the failing element named.
  void validate() const;
};

}  // namespace tdcosim::transmission
