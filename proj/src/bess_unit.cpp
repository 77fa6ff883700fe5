#include "tdcosim/bess/unit.hpp"

#include <algorithm>
#include <cmath>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::bess {

BessUnit::BessUnit(Params p) : params_(std::move(p)), soc_(params_.soc_initial) {
  if (params_.p_rating_kw < 0 || params_.e_rating_kwh <= 0)
    throw ConfigError("bess " + params_.id + ": ratings must be positive");
  if (params_.eta_charge <= 0 || params_.eta_charge > 1 ||
      params_.eta_discharge <= 0 || params_.eta_discharge > 1)
    throw ConfigError("bess " + params_.id + ": efficiencies must be in (0, 1]");
  if (!(0.0 <= params_.soc_min && params_.soc_min <= params_.soc_max && params_.soc_max <= 1.0))
    throw ConfigError("bess " + params_.id + ": SoC limits must satisfy 0 <= min <= max <= 1");
  if (soc_ < params_.soc_min || soc_ > params_.soc_max)
    throw ConfigError("bess " + params_.id + ": initial SoC outside limits");
}

Daa BessUnit::daa(const DaaOptions& opt) const {
  const double eta_d = opt.include_efficiency ? params_.eta_discharge : 1.0;
  const double eta_c = opt.include_efficiency ? params_.eta_charge : 1.0;
  // kWh of headroom sustained over 1/60 h gives kW.
  const double head_d = std::max(0.0, soc_ - params_.soc_min) * params_.e_rating_kwh;
  const double head_c = std::max(0.0, params_.soc_max - soc_) * params_.e_rating_kwh;
  Daa d;
  d.discharge_kw = std::min(params_.p_rating_kw, eta_d * head_d * 60.0);
  d.charge_kw = std::min(params_.p_rating_kw, head_c * 60.0 / eta_c);
  return d;
}

double BessUnit::feasible_power_kw(double p_cmd_kw, double dt_s) const {
  double p = std::clamp(p_cmd_kw, -params_.p_rating_kw, params_.p_rating_kw);
  const double hours = dt_s / 3600.0;
  if (p > 0.0) {
    const double head = (soc_ - params_.soc_min) * params_.e_rating_kwh;
    const double p_max = params_.eta_discharge * head / hours;
    p = std::min(p, std::max(0.0, p_max));
  } else if (p < 0.0) {
    const double head = (params_.soc_max - soc_) * params_.e_rating_kwh;
    const double p_max = head / (params_.eta_charge * hours);
    p = -std::min(-p, std::max(0.0, p_max));
  }
  return p;
}

double BessUnit::apply_setpoint(double p_cmd_kw, double dt_s) {
  if (dt_s <= 0.0) throw ConfigError("bess apply_setpoint: dt must be > 0");
  const double p = feasible_power_kw(p_cmd_kw, dt_s);
  const double hours = dt_s / 3600.0;
  if (p > 0.0) {
    const double d_soc = p * hours / (params_.eta_discharge * params_.e_rating_kwh);
    // Snap to the limit when the clamp was binding so rounding can never
    // push SoC outside the window.
    if (soc_ - d_soc <= params_.soc_min) soc_ = params_.soc_min;
    else soc_ -= d_soc;
  } else if (p < 0.0) {
    const double d_soc = -p * params_.eta_charge * hours / params_.e_rating_kwh;
    if (soc_ + d_soc >= params_.soc_max) soc_ = params_.soc_max;
    else soc_ += d_soc;
  }
  return p;
}

Daa fleet_daa(const std::vector<BessUnit>& units, const DaaOptions& opt) {
  Daa total;
  for (const auto& u : units) {
    const Daa d = u.daa(opt);
    total.discharge_kw += d.discharge_kw;
    total.charge_kw += d.charge_kw;
  }
  return total;
}

}  // namespace tdcosim::bess
