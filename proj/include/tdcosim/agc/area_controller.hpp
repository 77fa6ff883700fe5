#pragma once

#include <string>
#include <vector>

#include "tdcosim/agc/filter_pi.hpp"

namespace tdcosim::agc {

struct AceSplit {
  double ace_bess = 0.0;
  double ace_conventional = 0.0;
  bool exhausted = false;  // both availabilities were zero
};

/// ACE = tie deviation + bias * frequency deviation (export-positive ties,
/// positive ACE means over-generation).
double compute_ace(double beta_mw_per_hz, double df_hz, double dp_tie_mw);

/// Splits area ACE between the BESS fleet and conventional units in
/// proportion to their availabilities. The two outputs always sum to the
/// input exactly (the conventional share is formed by subtraction).
AceSplit split_ace(double ace_mw, double daa_bess_mw, double aa_conventional_mw);

/// A conventional unit participating in regulation.
struct Participant {
  std::string id;
  double factor = 0.0;        // participation factor; sums to 1 over the area
  double headroom_up_mw = 0.0;
  double headroom_down_mw = 0.0;
};

struct ConventionalDispatch {
  std::vector<double> setpoints_mw;  // aligned with participants
  bool saturated = false;            // every unit hit a headroom limit
};

/// setpoint_i = -command * factor_i, clamped to unit headroom; the clamped
/// remainder is redistributed once over units that still have room.
ConventionalDispatch dispatch_conventional(double command_mw,
                                           const std::vector<Participant>& participants);

struct BessDispatch {
  std::vector<double> setpoints_kw;  // discharge-positive, aligned with fleet
  bool exhausted = false;            // fleet DAA in the commanded direction was zero
};

/// Allocates -command across the fleet in proportion to each unit's DAA in
/// the commanded direction. daa_kw must hold that direction's values.
BessDispatch dispatch_bess(double command_kw, const std::vector<double>& daa_kw);

/// Sum of participant headroom in the direction a given command would move
/// the units (command < 0 raises output, consuming up-headroom).
double conventional_availability(const std::vector<Participant>& participants,
                                 bool raise_direction);

/// Per-area secondary control: ACE measurement split into two independently
/// filtered PI loops, one slow (conventional) and one fast (BESS).
class AreaController {
public:
  struct Params {
    int area_id = 0;
    double beta_mw_per_hz = 100.0;
    FilterPi::Params conventional;
    FilterPi::Params bess;
  };

  AreaController() = default;
  explicit AreaController(Params p);

  const Params& params() const { return params_; }

  /// Caller-measured inputs for one interval. Availabilities are the current
  /// ones (fleet DAA from SoC, conventional headroom net of the standing
  /// dispatch); the controller picks the direction from the sign of ACE.
  struct Measurement {
    double df_hz = 0.0;
    double dp_tie_mw = 0.0;
    double daa_discharge_mw = 0.0;
    double daa_charge_mw = 0.0;
    double aa_raise_mw = 0.0;
    double aa_lower_mw = 0.0;
  };

  struct Interval {
    double ace_mw = 0.0;
    double ace_bess_mw = 0.0;
    double ace_conv_mw = 0.0;
    double command_conv_mw = 0.0;  // filtered PI output, conventional loop
    double command_bess_mw = 0.0;  // filtered PI output, BESS loop
    bool regulation_exhausted = false;
  };

  /// Runs one AGC interval: ACE, split, both loops. Dispatch to devices is
  /// done by the caller from the two commands.
  Interval step(const Measurement& m, double dt_s);

private:
  Params params_;
  FilterPi conv_loop_;
  FilterPi bess_loop_;
};

}  // namespace tdcosim::agc
