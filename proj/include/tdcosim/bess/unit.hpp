#pragma once

#include <string>
#include <vector>

namespace tdcosim::bess {

/// 1-minute sustainable charge/discharge capability, refreshed each AGC interval.
struct Daa {
  double discharge_kw = 0.0;
  double charge_kw = 0.0;
};

struct DaaOptions {
  bool include_efficiency = true;
};

/// Battery unit with symmetric power rating, SoC window, and split
/// charge/discharge efficiencies. Setpoints are discharge-positive kW.
class BessUnit {
public:
  struct Params {
    std::string id;
    std::string feeder;
    std::string node;
    std::string phases = "abc";
    double p_rating_kw = 10.0;
    double e_rating_kwh = 4.21;
    double soc_min = 0.2;
    double soc_max = 0.8;
    double eta_charge = 0.95;
    double eta_discharge = 0.95;
    double soc_initial = 0.5;
  };

  BessUnit() = default;
  explicit BessUnit(Params p);

  const Params& params() const { return params_; }
  const std::string& id() const { return params_.id; }
  double soc() const { return soc_; }
  double setpoint_kw() const { return setpoint_kw_; }
  void set_setpoint_kw(double kw) { setpoint_kw_ = kw; }

  /// Largest constant power (kW) sustainable for one minute in each direction
  /// without leaving the SoC window.
  Daa daa(const DaaOptions& opt = {}) const;

  /// Largest power deliverable for the whole interval dt without leaving the
  /// SoC window; does not mutate state.
  double feasible_power_kw(double p_cmd_kw, double dt_s) const;

  /// Delivers p_cmd (clamped to rating and SoC window) for dt seconds and
  /// updates SoC. Returns the power actually delivered.
  double apply_setpoint(double p_cmd_kw, double dt_s);

private:
  Params params_;
  double soc_ = 0.5;
  double setpoint_kw_ = 0.0;
};

/// Sum of per-unit DAA over a fleet, both directions.
Daa fleet_daa(const std::vector<BessUnit>& units, const DaaOptions& opt = {});

}  // namespace tdcosim::bess
