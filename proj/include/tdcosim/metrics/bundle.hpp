#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tdcosim::metrics {

struct ViolationEvent {
  double t_s = 0.0;
  std::string feeder;
  int node = 0;
  int phase = 0;  // 0=a 1=b 2=c
  double v_pu = 0.0;
};

struct WarningEvent {
  double t_s = 0.0;
  std::string message;
};

/// Everything a run produces. All time series share the distribution time
/// base; AGC-interval quantities (split channels, commands) are held between
/// intervals. Scalar summaries are always recomputed from the series.
struct MetricsBundle {
  std::string scenario_name;
  std::string coupling;  // "tc" | "lc"
  std::string model;     // "cosim" | "aggregated"
  std::uint64_t seed = 0;
  double dt_s = 1.0;

  std::vector<double> t_s;

  std::vector<int> area_ids;
  // Outer index: area (area_ids order); inner: step.
  std::vector<std::vector<double>> freq_hz;      // deviation from nominal
  std::vector<std::vector<double>> tie_dev_mw;   // export-positive deviation
  std::vector<std::vector<double>> ace_mw;       // measured every step
  std::vector<std::vector<double>> ace_b_mw;     // interval split, held
  std::vector<std::vector<double>> ace_g_mw;
  std::vector<std::vector<double>> cmd_conv_mw;  // loop outputs, held
  std::vector<std::vector<double>> cmd_bess_mw;
  std::vector<double> freq_coi_hz;

  std::vector<std::string> feeder_ids;
  std::vector<int> pcc_buses;
  // Outer index: feeder.
  std::vector<std::vector<double>> pcc_p_mw;
  std::vector<std::vector<double>> pcc_q_mvar;
  std::vector<std::vector<double>> feeder_vmin_pu;  // empty in aggregated runs
  std::vector<std::vector<double>> feeder_vmax_pu;

  std::vector<std::string> unit_ids;
  // Outer index: unit.
  std::vector<std::vector<double>> bess_kw;  // actual, discharge-positive
  std::vector<std::vector<double>> bess_soc;

  std::vector<int> exchange_iterations;      // per step
  std::vector<double> exchange_mismatch_pu;  // final per-step mismatch

  std::vector<ViolationEvent> violations;
  std::vector<WarningEvent> warnings;

  /// Sum over areas of |ACE| at one step (the combined presentation).
  std::vector<double> system_ace_mw() const;

  struct Summary {
    std::vector<double> ace_std_mw;  // per area
    double system_ace_std_mw = 0.0;
    std::vector<double> max_abs_freq_hz;  // per area
    double max_abs_freq_coi_hz = 0.0;
    std::vector<double> max_abs_tie_dev_mw;  // per area
    std::size_t violation_count = 0;
    std::size_t warning_count = 0;
    double exchange_mean_iterations = 0.0;
    int exchange_max_iterations = 0;
    int nonconverged_steps = 0;  // mismatch above tolerance at the cap
    double tc_tolerance_pu = 0.0;
  };
  Summary compute_summary(double tc_tolerance_pu) const;
};

/// Population standard deviation. Throws ConfigError on fewer than 2 samples.
double ace_std(const std::vector<double>& series);

}  // namespace tdcosim::metrics
