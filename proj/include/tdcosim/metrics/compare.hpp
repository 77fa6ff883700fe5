#pragma once

#include <string>

namespace tdcosim::metrics {

struct CompareReport {
  std::string text;
  bool regression = false;  // candidate worse than baseline on a headline metric
};

/// Side-by-side report of two run directories, baseline first. Headline
/// metrics (system ACE spread, worst frequency excursion, violation count)
/// drive the regression flag; a 0.1% band separates noise from movement.
/// Throws ConfigError when either directory is unreadable or the two runs
/// cover different horizons.
CompareReport compare_runs(const std::string& dir_baseline, const std::string& dir_candidate);

}  // namespace tdcosim::metrics
