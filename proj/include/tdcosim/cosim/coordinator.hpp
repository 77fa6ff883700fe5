#pragma once

#include <functional>
#include <optional>
#include <string>

#include "tdcosim/cosim/config.hpp"
#include "tdcosim/metrics/bundle.hpp"

namespace tdcosim::cosim {

struct RunResult {
  metrics::MetricsBundle bundle;
  /// Abort reason (solver divergence, generator trip). The bundle keeps every
  /// row recorded before the abort.
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

using ProgressFn = std::function<void(double t_s, double horizon_s)>;

/// Runs the coupled simulation to the horizon (or the first fatal solver
/// error) and returns everything it measured. Deterministic: same config,
/// same bundle. The optional callback fires about once per simulated minute.
RunResult run_simulation(const ScenarioConfig& cfg, const ProgressFn& progress = {});

}  // namespace tdcosim::cosim
