#include "tdcosim/agc/filter_pi.hpp"

#include <algorithm>
#include <cmath>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::agc {

double FilterPi::step(double input, double dt_s) {
  if (dt_s <= 0.0) throw ConfigError("FilterPi::step: dt must be > 0");
  if (params_.tau_s > 0.0) {
    const double alpha = 1.0 - std::exp(-dt_s / params_.tau_s);
    filter_state_ += alpha * (input - filter_state_);
  } else {
    filter_state_ = input;
  }
  integrator_state_ += params_.ki * filter_state_ * dt_s;
  // Clamping the integrator to the output range keeps the PI from winding
  // up past its limits; on command reversal the output leaves the limit
  // within one step.
  integrator_state_ = std::clamp(integrator_state_, params_.out_min, params_.out_max);
  return std::clamp(params_.kp * filter_state_ + integrator_state_,
                    params_.out_min, params_.out_max);
}

void FilterPi::reset() {
  filter_state_ = 0.0;
  integrator_state_ = 0.0;
}

}  // namespace tdcosim::agc
