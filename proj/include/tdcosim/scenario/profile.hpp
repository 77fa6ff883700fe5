#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tdcosim::scenario {

/// Uniformly sampled multiplier series anchored to a clock window.
struct Profile {
  enum class Kind { load, pv };

  std::string id;
  Kind kind = Kind::load;
  double interval_s = 1.0;
  int window_start_s = 0;  // seconds since midnight
  std::vector<double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) * interval_s; }
  int window_end_s() const;

  /// Zero-order hold: sample k covers [k*interval, (k+1)*interval). t_s is
  /// relative to the window start; values clamp to the first/last sample.
  double value_at(double t_s) const;

  /// Enforces the type invariants (finite non-negative samples, interval > 0).
  void validate() const;
};

/// "HH:MM" or "HH:MM:SS" -> seconds since midnight.
int parse_clock(const std::string& s);
std::string format_clock(int seconds_since_midnight);

std::vector<Profile> read_profiles(std::istream& in, const std::string& filename);
std::vector<Profile> load_profiles(const std::string& path);
void write_profiles(std::ostream& out, const std::vector<Profile>& profiles);
void save_profiles(const std::string& path, const std::vector<Profile>& profiles);

/// Zero-order-hold resample. The new interval must tile the window exactly.
Profile resample(const Profile& p, double new_interval_s);

/// Path length of the series divided by the path length of the clear-sky
/// reference over the same window, with sample steps in percent of the
/// reference peak and time steps in minutes, both taken on a one-minute
/// view. The reference itself scores 1; an all-dark window scores 1 by
/// convention. Windows and sampling of the two profiles must match.
double variability_index(const Profile& p, const Profile& clear_sky);

/// Daytime generation bump: sin^2 between 06:00 and 18:00, zero at night,
/// evaluated at the requested clock window.
Profile clear_sky_profile(const std::string& id, int window_start_s, double duration_s,
                          double interval_s);

struct PvNoiseOptions {
  double tau_s = 60.0;          // correlation time of the cloud noise
  double tolerance = 0.02;      // relative VI matching tolerance
  double max_amplitude = 64.0;  // search ceiling before declaring the target unreachable
};

/// Multiplies the base shape by seeded band-limited noise, scaling the noise
/// amplitude by bisection until the variability index lands within tolerance
/// of the target. Deterministic per seed. Throws if clipping at zero caps the
/// attainable VI below the target (the message reports the maximum reached).
Profile generate_pv_profile(const Profile& base, double target_vi, std::uint64_t seed,
                            const PvNoiseOptions& options = {});

}  // namespace tdcosim::scenario
