#include "tdcosim/agc/area_controller.hpp"

#include <algorithm>
#include <cmath>

namespace tdcosim::agc {

double compute_ace(double beta_mw_per_hz, double df_hz, double dp_tie_mw) {
  return dp_tie_mw + beta_mw_per_hz * df_hz;
}

AceSplit split_ace(double ace_mw, double daa_bess_mw, double aa_conventional_mw) {
  AceSplit s;
  const double daa = std::max(0.0, daa_bess_mw);
  const double aa = std::max(0.0, aa_conventional_mw);
  const double total = daa + aa;
  if (total <= 0.0) {
    // Nothing can regulate; hand the whole signal to the conventional loop
    // so its integrator keeps tracking, and flag the condition.
    s.ace_bess = 0.0;
    s.ace_conventional = ace_mw;
    s.exhausted = true;
    return s;
  }
  s.ace_bess = ace_mw * (daa / total);
  s.ace_conventional = ace_mw - s.ace_bess;
  // Rounding in the two lines above can leave the recombined sum an ulp off;
  // nudge the shares until the identity holds bit for bit.
  if (s.ace_bess + s.ace_conventional != ace_mw) {
    s.ace_bess = ace_mw - s.ace_conventional;
  }
  if (s.ace_bess + s.ace_conventional != ace_mw) {
    s.ace_conventional = ace_mw - s.ace_bess;
  }
  return s;
}

ConventionalDispatch dispatch_conventional(double command_mw,
                                           const std::vector<Participant>& participants) {
  ConventionalDispatch d;
  d.setpoints_mw.assign(participants.size(), 0.0);
  if (participants.empty()) {
    d.saturated = std::abs(command_mw) > 0.0;
    return d;
  }

  const double desired_total = -command_mw;  // positive ACE lowers output
  double factor_sum = 0.0;
  for (const auto& p : participants) factor_sum += std::max(0.0, p.factor);
  if (factor_sum <= 0.0) factor_sum = 1.0;

  auto clamp_to_headroom = [](double sp, const Participant& p) {
    return std::clamp(sp, -std::max(0.0, p.headroom_down_mw),
                      std::max(0.0, p.headroom_up_mw));
  };

  double assigned = 0.0;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const double raw = desired_total * std::max(0.0, participants[i].factor) / factor_sum;
    d.setpoints_mw[i] = clamp_to_headroom(raw, participants[i]);
    assigned += d.setpoints_mw[i];
  }

  // One redistribution pass: hand the clamped remainder to units that still
  // have headroom in the needed direction, weighted by their factors.
  double leftover = desired_total - assigned;
  const double tiny = 1e-12 * std::max(1.0, std::abs(desired_total));
  if (std::abs(leftover) > tiny) {
    double eligible_factor = 0.0;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < participants.size(); ++i) {
      const auto& p = participants[i];
      const double room = leftover > 0.0
                              ? std::max(0.0, p.headroom_up_mw) - d.setpoints_mw[i]
                              : d.setpoints_mw[i] + std::max(0.0, p.headroom_down_mw);
      if (room > tiny) {
        eligible.push_back(i);
        eligible_factor += std::max(0.0, p.factor);
      }
    }
    if (!eligible.empty() && eligible_factor > 0.0) {
      for (std::size_t i : eligible) {
        const double extra =
            leftover * std::max(0.0, participants[i].factor) / eligible_factor;
        d.setpoints_mw[i] = clamp_to_headroom(d.setpoints_mw[i] + extra, participants[i]);
      }
    }
    assigned = 0.0;
    for (double sp : d.setpoints_mw) assigned += sp;
    leftover = desired_total - assigned;
  }
  d.saturated = std::abs(leftover) > 1e-9 * std::max(1.0, std::abs(desired_total));
  return d;
}

BessDispatch dispatch_bess(double command_kw, const std::vector<double>& daa_kw) {
  BessDispatch d;
  d.setpoints_kw.assign(daa_kw.size(), 0.0);
  double total = 0.0;
  for (double a : daa_kw) total += std::max(0.0, a);
  if (total <= 0.0) {
    d.exhausted = std::abs(command_kw) > 0.0;
    return d;
  }
  const double desired_total = -command_kw;  // discharge-positive
  for (std::size_t i = 0; i < daa_kw.size(); ++i) {
    const double avail = std::max(0.0, daa_kw[i]);
    double sp = desired_total * avail / total;
    sp = std::clamp(sp, -avail, avail);
    d.setpoints_kw[i] = sp;
  }
  return d;
}

double conventional_availability(const std::vector<Participant>& participants,
                                 bool raise_direction) {
  double sum = 0.0;
  for (const auto& p : participants) {
    sum += std::max(0.0, raise_direction ? p.headroom_up_mw : p.headroom_down_mw);
  }
  return sum;
}

AreaController::AreaController(Params p)
    : params_(std::move(p)),
      conv_loop_(params_.conventional),
      bess_loop_(params_.bess) {}

AreaController::Interval AreaController::step(const Measurement& m, double dt_s) {
  Interval out;
  out.ace_mw = compute_ace(params_.beta_mw_per_hz, m.df_hz, m.dp_tie_mw);

  // Positive ACE means over-generation: conventional units must come down
  // (lower headroom) and storage must absorb (charge availability).
  const bool lower = out.ace_mw >= 0.0;
  const double daa = lower ? m.daa_charge_mw : m.daa_discharge_mw;
  const double aa = lower ? m.aa_lower_mw : m.aa_raise_mw;

  const AceSplit split = split_ace(out.ace_mw, daa, aa);
  out.ace_bess_mw = split.ace_bess;
  out.ace_conv_mw = split.ace_conventional;
  out.regulation_exhausted = split.exhausted;

  out.command_conv_mw = conv_loop_.step(split.ace_conventional, dt_s);
  out.command_bess_mw = bess_loop_.step(split.ace_bess, dt_s);
  return out;
}

}  // namespace tdcosim::agc
