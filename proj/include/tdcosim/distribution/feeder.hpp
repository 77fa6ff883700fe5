#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace tdcosim::distribution {

using Complex = std::complex<double>;
using Zmatrix = std::array<std::array<Complex, 3>, 3>;  // ohms (or ohms/km)

/// Bitmask over phases a/b/c (bits 0/1/2).
using PhaseMask = unsigned;
constexpr PhaseMask kPhaseA = 1u, kPhaseB = 2u, kPhaseC = 4u, kPhaseAbc = 7u;

PhaseMask parse_phases(const std::string& s);  // "a".."abc", throws ConfigError
std::string phases_name(PhaseMask m);
int phase_count(PhaseMask m);

struct Node {
  int id = 0;
  PhaseMask phases = kPhaseAbc;
  double base_kv_ll = 0.0;  // line-to-line
};

struct Segment {
  int from = 0;
  int to = 0;
  double length_km = 0.0;
  std::string config;  // line construction name
};

struct LineConfig {
  std::string name;
  Zmatrix z_per_km{};  // symmetric
};

struct Transformer {
  int from = 0;
  int to = 0;
  double r_ohm = 0.0;  // series, referred to the 'to' (secondary) side, per phase
  double x_ohm = 0.0;
  double ratio = 1.0;  // actual winding ratio V_from / V_to
};

struct Load {
  int node = 0;
  int phase = 0;  // 0=a 1=b 2=c
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

struct PvSystem {
  std::string id;
  int node = 0;
  PhaseMask phases = kPhaseAbc;
  double rating_kw = 0.0;
  std::string profile_id;
};

struct BessAttachment {
  std::string unit_id;
  int node = 0;
  PhaseMask phases = kPhaseAbc;
};

struct Feeder {
  std::string id;
  int head_node = 0;
  double vmin_pu = 0.95;
  double vmax_pu = 1.05;
  std::vector<Node> nodes;
  std::vector<LineConfig> line_configs;
  std::vector<Segment> segments;
  std::vector<Transformer> transformers;
  std::vector<Load> loads;
  std::vector<PvSystem> pv_systems;
  std::vector<BessAttachment> bess_attachments;

  int node_index(int node_id) const;  // -1 if absent
  const Node& node(int node_id) const;
  const LineConfig& line_config(const std::string& name) const;

  double total_load_kw() const;
  double total_load_kvar() const;
  double total_pv_rating_kw() const;

  /// Tree rooted at the head, device references resolve, phases present,
  /// impedance matrices symmetric, child phases within parent phases.
  void validate() const;
};

/// Everything the aggregated model keeps of a feeder: device totals only,
/// no network.
struct AggregatedFeeder {
  double load_kw = 0.0;
  double load_kvar = 0.0;
  double pv_rating_kw = 0.0;
  double bess_p_rating_kw = 0.0;
  double bess_e_rating_kwh = 0.0;
  double bess_soc = 0.0;  // energy-weighted mean
};

struct BessRatingView {
  std::string unit_id;
  double p_rating_kw = 0.0;
  double e_rating_kwh = 0.0;
  double soc = 0.0;
};

AggregatedFeeder aggregate_feeder(const Feeder& feeder,
                                  const std::vector<BessRatingView>& units);

}  // namespace tdcosim::distribution
