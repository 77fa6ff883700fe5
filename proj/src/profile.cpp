#include "tdcosim/scenario/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"

namespace tdcosim::scenario {

namespace {

constexpr double kWindowTol = 1e-6;  // seconds

std::string kind_name(Profile::Kind k) {
  return k == Profile::Kind::load ? "load" : "pv";
}

}  // namespace

int Profile::window_end_s() const {
  return window_start_s + static_cast<int>(std::llround(duration_s()));
}

double Profile::value_at(double t_s) const {
  if (samples.empty()) throw ConfigError("profile '" + id + "' has no samples");
  auto idx = static_cast<long long>(std::floor(t_s / interval_s));
  idx = std::clamp<long long>(idx, 0, static_cast<long long>(samples.size()) - 1);
  return samples[static_cast<std::size_t>(idx)];
}

void Profile::validate() const {
  if (id.empty()) throw ConfigError("profile with empty id");
  if (!(interval_s > 0.0)) {
    throw ConfigError("profile '" + id + "': sample interval must be positive");
  }
  if (samples.empty()) throw ConfigError("profile '" + id + "' has no samples");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!std::isfinite(samples[k]) || samples[k] < 0.0) {
      throw ConfigError("profile '" + id + "': sample " + std::to_string(k) +
                        " is negative or not finite");
    }
  }
}

int parse_clock(const std::string& s) {
  int h = 0, m = 0, sec = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  in >> h >> c1 >> m;
  if (!in || c1 != ':' || h < 0 || h > 24 || m < 0 || m > 59) {
    throw ConfigError("bad clock time '" + s + "' (expected HH:MM or HH:MM:SS)");
  }
  if (in.peek() == ':') {
    in >> c2 >> sec;
    if (!in || sec < 0 || sec > 59) {
      throw ConfigError("bad clock time '" + s + "'");
    }
  }
  return h * 3600 + m * 60 + sec;
}

std::string format_clock(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", t / 3600, (t / 60) % 60, t % 60);
  return buf;
}

std::vector<Profile> read_profiles(std::istream& in, const std::string& filename) {
  std::vector<Profile> out;
  Profile cur;
  bool in_block = false;
  bool have_samples = false;
  int declared_end_s = -1;
  int block_line = 0;
  std::string raw;
  int lineno = 0;

  auto finish = [&](int at_line) {
    if (!in_block) return;
    if (declared_end_s < 0) {
      throw ParseError(filename, block_line, "profile '" + cur.id + "' missing window");
    }
    try {
      cur.validate();
    } catch (const ConfigError& e) {
      throw ParseError(filename, at_line, e.what());
    }
    const double declared = declared_end_s - cur.window_start_s;
    if (std::abs(declared - cur.duration_s()) > kWindowTol) {
      throw ParseError(filename, at_line,
                       "profile '" + cur.id + "': window length " +
                           std::to_string(declared) + " s does not equal samples x interval = " +
                           std::to_string(cur.duration_s()) + " s");
    }
    out.push_back(std::move(cur));
    cur = Profile{};
    have_samples = false;
    declared_end_s = -1;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::strip_comment(raw);
    if (line.empty()) continue;
    const auto tok = text::tokens(line);

    if (tok[0] == "profile") {
      if (tok.size() != 2) throw ParseError(filename, lineno, "expected: profile <id>");
      finish(lineno);
      in_block = true;
      block_line = lineno;
      cur.id = tok[1];
      continue;
    }
    if (!in_block) {
      throw ParseError(filename, lineno, "content before first 'profile' header");
    }

    if (tok[0] == "kind" || tok[0] == "interval_s" || tok[0] == "window") {
      if (have_samples) {
        throw ParseError(filename, lineno, "header line after sample data");
      }
      if (tok[0] == "kind") {
        if (tok.size() != 2 || (tok[1] != "load" && tok[1] != "pv")) {
          throw ParseError(filename, lineno, "kind must be 'load' or 'pv'");
        }
        cur.kind = tok[1] == "load" ? Profile::Kind::load : Profile::Kind::pv;
      } else if (tok[0] == "interval_s") {
        if (tok.size() != 2 || !text::parse_double(tok[1], cur.interval_s) ||
            !(cur.interval_s > 0.0)) {
          throw ParseError(filename, lineno, "interval_s must be a positive number");
        }
      } else {
        if (tok.size() != 3) {
          throw ParseError(filename, lineno, "expected: window <start> <end>");
        }
        try {
          cur.window_start_s = parse_clock(tok[1]);
          declared_end_s = parse_clock(tok[2]);
        } catch (const ConfigError& e) {
          throw ParseError(filename, lineno, e.what());
        }
        if (declared_end_s <= cur.window_start_s) {
          throw ParseError(filename, lineno, "window end must follow window start");
        }
      }
      continue;
    }

    // Anything else must be one multiplier per line.
    if (tok.size() != 1) {
      throw ParseError(filename, lineno, "expected one multiplier per line");
    }
    double v = 0.0;
    if (!text::parse_double(tok[0], v)) {
      throw ParseError(filename, lineno, "bad multiplier '" + tok[0] + "'");
    }
    if (!std::isfinite(v) || v < 0.0) {
      throw ParseError(filename, lineno, "multiplier must be finite and >= 0");
    }
    cur.samples.push_back(v);
    have_samples = true;
  }
  finish(lineno);
  if (out.empty()) throw ParseError(filename, lineno, "no profiles in file");
  return out;
}

std::vector<Profile> load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile file '" + path + "'");
  return read_profiles(in, path);
}

void write_profiles(std::ostream& out, const std::vector<Profile>& profiles) {
  char buf[32];
  for (const auto& p : profiles) {
    out << "profile " << p.id << "\n";
    out << "kind " << kind_name(p.kind) << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", p.interval_s);
    out << "interval_s " << buf << "\n";
    out << "window " << format_clock(p.window_start_s) << " "
        << format_clock(p.window_end_s()) << "\n";
    for (double v : p.samples) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << "\n";
    }
  }
}

void save_profiles(const std::string& path, const std::vector<Profile>& profiles) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write profile file '" + path + "'");
  write_profiles(out, profiles);
  if (!out.good()) throw ConfigError("write failed for '" + path + "'");
}

Profile resample(const Profile& p, double new_interval_s) {
  p.validate();
  if (!(new_interval_s > 0.0)) throw ConfigError("resample interval must be positive");
  const double ratio = p.duration_s() / new_interval_s;
  const auto n = static_cast<long long>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw ConfigError("profile '" + p.id + "': interval " + std::to_string(new_interval_s) +
                      " s does not tile the " + std::to_string(p.duration_s()) + " s window");
  }
  Profile r = p;
  r.interval_s = new_interval_s;
  r.samples.clear();
  r.samples.reserve(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) {
    // Midpoint lookup keeps the mapping robust to rounding at sample edges.
    r.samples.push_back(p.value_at((static_cast<double>(k) + 0.5) * new_interval_s));
  }
  return r;
}

double variability_index(const Profile& p, const Profile& clear_sky) {
  if (p.samples.size() < 2) {
    throw ConfigError("variability index needs at least 2 samples");
  }
  if (clear_sky.samples.size() != p.samples.size() ||
      clear_sky.interval_s != p.interval_s ||
      clear_sky.window_start_s != p.window_start_s) {
    throw ConfigError("variability index needs the clear-sky reference on the same window");
  }
  // Variability classes are defined on one-minute data; finer profiles are
  // viewed at that cadence first so the index is sampling-rate independent.
  if (p.interval_s < 60.0) {
    const double dur = p.duration_s();
    const auto n60 = static_cast<long long>(std::llround(dur / 60.0));
    if (n60 >= 2 && std::abs(dur - 60.0 * static_cast<double>(n60)) < 1e-6) {
      return variability_index(resample(p, 60.0), resample(clear_sky, 60.0));
    }
  }
  const std::size_t n = p.samples.size();
  const double peak = *std::max_element(clear_sky.samples.begin(), clear_sky.samples.end());
  if (!(peak > 0.0)) return 1.0;  // dark window, by convention

  const double dt_min = p.interval_s / 60.0;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double dp = 100.0 * (p.samples[k] - p.samples[k - 1]) / peak;
    const double dr = 100.0 * (clear_sky.samples[k] - clear_sky.samples[k - 1]) / peak;
    num += std::hypot(dp, dt_min);
    den += std::hypot(dr, dt_min);
  }
  return num / den;
}

Profile clear_sky_profile(const std::string& id, int window_start_s, double duration_s,
                          double interval_s) {
  if (!(interval_s > 0.0) || !(duration_s > 0.0)) {
    throw ConfigError("clear-sky profile needs positive duration and interval");
  }
  const double ratio = duration_s / interval_s;
  const auto n = static_cast<long long>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw ConfigError("clear-sky window must be a whole number of intervals");
  }
  Profile p;
  p.id = id;
  p.kind = Profile::Kind::pv;
  p.interval_s = interval_s;
  p.window_start_s = window_start_s;
  p.samples.resize(static_cast<std::size_t>(n));
  constexpr double sunrise_s = 6.0 * 3600.0;
  constexpr double daylight_s = 12.0 * 3600.0;
  for (long long k = 0; k < n; ++k) {
    const double t = window_start_s + static_cast<double>(k) * interval_s;
    const double x = (t - sunrise_s) / daylight_s;
    double v = 0.0;
    if (x > 0.0 && x < 1.0) {
      const double sine = std::sin(M_PI * x);
      v = sine * sine;
    }
    p.samples[static_cast<std::size_t>(k)] = v;
  }
  return p;
}

namespace {

/// Standard-normal deviates built on the fully specified mt19937_64 stream,
/// so generated profiles are identical across standard libraries.
class GaussianSource {
public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

private:
  double uniform() { return std::ldexp(static_cast<double>(rng_() >> 11), -53); }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace

Profile generate_pv_profile(const Profile& base, double target_vi, std::uint64_t seed,
                            const PvNoiseOptions& options) {
  base.validate();
  if (!(target_vi >= 1.0)) throw ConfigError("target VI must be >= 1");
  if (base.samples.size() < 2) throw ConfigError("base profile needs at least 2 samples");
  if (target_vi <= 1.0 + 1e-12) return base;

  const std::size_t n = base.samples.size();
  std::vector<double> noise(n);
  GaussianSource g(seed);
  const double alpha = 1.0 - std::exp(-base.interval_s / std::max(1e-9, options.tau_s));
  double state = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    state += alpha * (g.next() - state);
    noise[k] = state;
  }
  // Normalize so amplitude means "fractional modulation depth".
  double mean = 0.0;
  for (double v : noise) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : noise) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var > 0.0) {
    const double inv = 1.0 / std::sqrt(var);
    for (double& v : noise) v = (v - mean) * inv;
  }

  Profile out = base;
  auto apply = [&](double amplitude) {
    for (std::size_t k = 0; k < n; ++k) {
      // Clouds chop output downward; edge reflection adds at most ~15% above
      // the clear-sky curve, which keeps the index's percent scale anchored.
      const double raw = base.samples[k] * (1.0 + amplitude * noise[k]);
      out.samples[k] = std::clamp(raw, 0.0, 1.15 * base.samples[k]);
    }
    return variability_index(out, base);
  };

  // Grow the bracket until the target is covered, then bisect on amplitude.
  double lo = 0.0, hi = 1.0;
  double vi_hi = apply(hi);
  while (vi_hi < target_vi && hi < options.max_amplitude) {
    lo = hi;
    hi *= 2.0;
    vi_hi = apply(hi);
  }
  if (vi_hi < target_vi) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "target VI %.4g unreachable for profile '%s': max attainable ~= %.4g "
                  "(samples clip at zero)",
                  target_vi, base.id.c_str(), vi_hi);
    throw ConfigError(msg);
  }

  double best_a = hi, best_err = std::abs(vi_hi - target_vi);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double vi = apply(mid);
    const double err = std::abs(vi - target_vi);
    if (err < best_err) {
      best_err = err;
      best_a = mid;
    }
    if (err <= 0.25 * options.tolerance * target_vi) break;
    (vi < target_vi ? lo : hi) = mid;
  }
  const double achieved = apply(best_a);
  if (std::abs(achieved - target_vi) > options.tolerance * target_vi) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "bisection failed to match VI %.4g for profile '%s' (reached %.4g)",
                  target_vi, base.id.c_str(), achieved);
    throw ConfigError(msg);
  }
  return out;
}

}  // namespace tdcosim::scenario
