#pragma once

namespace tdcosim::agc {

/// First-order low-pass followed by a PI stage with anti-windup.
/// The filter uses the exact one-step discretization so it stays stable
/// for any dt/tau ratio (the BESS loop runs tau well below the AGC interval).
class FilterPi {
public:
  struct Params {
    double tau_s = 60.0;  // 0 bypasses the filter
    double kp = 0.1;
    double ki = 0.05;     // 1/s
    double out_min = -1e9;
    double out_max = 1e9;
  };

  FilterPi() = default;
  explicit FilterPi(Params p) : params_(p) {}

  const Params& params() const { return params_; }
  double filter_state() const { return filter_state_; }
  double integrator_state() const { return integrator_state_; }

  double step(double input, double dt_s);
  void reset();

private:
  Params params_;
  double filter_state_ = 0.0;
  double integrator_state_ = 0.0;
};

}  // namespace tdcosim::agc
