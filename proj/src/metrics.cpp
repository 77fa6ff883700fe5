#include "tdcosim/metrics/bundle.hpp"

#include <algorithm>
#include <cmath>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::metrics {

double ace_std(const std::vector<double>& series) {
  if (series.size() < 2) throw ConfigError("standard deviation needs at least 2 samples");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(series.size());
  return std::sqrt(var);
}

std::vector<double> MetricsBundle::system_ace_mw() const {
  std::vector<double> out(t_s.size(), 0.0);
  for (const auto& series : ace_mw) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += std::abs(series[k]);
  }
  return out;
}

MetricsBundle::Summary MetricsBundle::compute_summary(double tc_tolerance_pu) const {
  Summary s;
  s.tc_tolerance_pu = tc_tolerance_pu;
  for (const auto& series : ace_mw) s.ace_std_mw.push_back(ace_std(series));
  s.system_ace_std_mw = ace_std(system_ace_mw());
  for (const auto& series : freq_hz) {
    double m = 0.0;
    for (double v : series) m = std::max(m, std::abs(v));
    s.max_abs_freq_hz.push_back(m);
  }
  for (double v : freq_coi_hz) {
    s.max_abs_freq_coi_hz = std::max(s.max_abs_freq_coi_hz, std::abs(v));
  }
  for (const auto& series : tie_dev_mw) {
    double m = 0.0;
    for (double v : series) m = std::max(m, std::abs(v));
    s.max_abs_tie_dev_mw.push_back(m);
  }
  s.violation_count = violations.size();
  s.warning_count = warnings.size();
  double iter_sum = 0.0;
  for (std::size_t k = 0; k < exchange_iterations.size(); ++k) {
    iter_sum += exchange_iterations[k];
    s.exchange_max_iterations = std::max(s.exchange_max_iterations, exchange_iterations[k]);
    if (exchange_mismatch_pu[k] > tc_tolerance_pu) ++s.nonconverged_steps;
  }
  if (!exchange_iterations.empty()) {
    s.exchange_mean_iterations = iter_sum / static_cast<double>(exchange_iterations.size());
  }
  return s;
}

}  // namespace tdcosim::metrics
