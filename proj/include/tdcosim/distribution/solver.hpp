#pragma once

#include <map>
#include <string>
#include <vector>

#include "tdcosim/distribution/feeder.hpp"

namespace tdcosim::distribution {

struct SolverOptions {
  double tol_pu = 1e-10;  // max node-voltage change between sweeps
  int max_iterations = 100;
};

struct FeederSolution {
  /// Line-to-neutral volts per node (feeder.nodes order); absent phases are 0.
  std::vector<std::array<Complex, 3>> v_volts;
  std::vector<std::array<Complex, 3>> v_pu;
  /// Current entering each node from its parent, amps on the node's side.
  /// The head entry holds the total current drawn from the source.
  std::vector<std::array<Complex, 3>> branch_current_a;
  Complex head_s_kva;  // import-positive complex power at the head
  int iterations = 0;
  double max_mismatch_pu = 0.0;
};

/// Forward-backward sweep over the radial feeder. head_voltage_pu is the
/// positive-sequence transmission voltage, applied identically to the three
/// phases. injections_kva maps device ids (PV system ids, BESS unit ids) to
/// generation-positive complex power; devices without an entry inject zero.
/// load_multiplier scales every constant-power load.
FeederSolution solve_feeder(const Feeder& feeder, Complex head_voltage_pu,
                            const std::map<std::string, Complex>& injections_kva,
                            double load_multiplier = 1.0, const SolverOptions& opt = {});

Complex head_power_kva(const FeederSolution& solution);

struct Violation {
  int node = 0;
  int phase = 0;  // 0=a 1=b 2=c
  double v_pu = 0.0;
};

/// Every node-phase whose solved magnitude lies outside the feeder's limits,
/// reported exactly once.
std::vector<Violation> check_voltage_limits(const Feeder& feeder,
                                            const FeederSolution& solution);

}  // namespace tdcosim::distribution
