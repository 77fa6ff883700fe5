#include "tdcosim/metrics/compare.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"

namespace tdcosim::metrics {
namespace {

struct AreaStats {
  double ace_std_mw = 0.0;
  double max_abs_freq_hz = 0.0;
  double max_abs_tie_dev_mw = 0.0;
};

struct RunSummary {
  std::string scenario, coupling, model;
  double dt_s = 0.0;
  long long rows = 0;
  double system_ace_std_mw = 0.0;
  double max_abs_freq_coi_hz = 0.0;
  long long violations = 0;
  long long warnings = 0;
  std::map<int, AreaStats> areas;
  bool has_stats = false;
  std::string error;
};

RunSummary read_summary(const std::string& dir) {
  const auto path = (std::filesystem::path(dir) / "summary.txt").string();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "' (is this a run directory?)");
  RunSummary s;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto tok = text::tokens(raw);
    if (tok.empty()) continue;
    const auto num_at = [&](std::size_t i) {
      double v = 0.0;
      if (i >= tok.size() || !text::parse_double(tok[i], v)) {
        throw ParseError(path, lineno, "bad numeric field");
      }
      return v;
    };
    const std::string& k = tok[0];
    if (k == "scenario" && tok.size() > 1) s.scenario = tok[1];
    else if (k == "coupling" && tok.size() > 1) s.coupling = tok[1];
    else if (k == "model" && tok.size() > 1) s.model = tok[1];
    else if (k == "dt_s") s.dt_s = num_at(1);
    else if (k == "rows") s.rows = static_cast<long long>(num_at(1));
    else if (k == "system_ace_std_mw") {
      s.system_ace_std_mw = num_at(1);
      s.has_stats = true;
    } else if (k == "max_abs_freq_coi_hz") s.max_abs_freq_coi_hz = num_at(1);
    else if (k == "violations") s.violations = static_cast<long long>(num_at(1));
    else if (k == "warnings") s.warnings = static_cast<long long>(num_at(1));
    else if (k == "area") {
      int id = 0;
      if (tok.size() < 8 || !text::parse_int(tok[1], id)) {
        throw ParseError(path, lineno, "malformed area line");
      }
      AreaStats a;
      for (std::size_t i = 2; i + 1 < tok.size(); i += 2) {
        if (tok[i] == "ace_std_mw") a.ace_std_mw = num_at(i + 1);
        else if (tok[i] == "max_abs_freq_hz") a.max_abs_freq_hz = num_at(i + 1);
        else if (tok[i] == "max_abs_tie_dev_mw") a.max_abs_tie_dev_mw = num_at(i + 1);
      }
      s.areas[id] = a;
    } else if (k == "error") {
      s.error = raw.substr(raw.find("error") + 6);
    }
  }
  return s;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

CompareReport compare_runs(const std::string& dir_baseline, const std::string& dir_candidate) {
  const RunSummary a = read_summary(dir_baseline);
  const RunSummary b = read_summary(dir_candidate);

  if (!a.error.empty() || !b.error.empty()) {
    throw ConfigError(std::string("cannot compare: run aborted (") +
                      (!a.error.empty() ? a.error : b.error) + ")");
  }
  if (!a.has_stats || !b.has_stats) {
    throw ConfigError("cannot compare: a run has no computed statistics");
  }
  if (a.rows != b.rows || std::abs(a.dt_s - b.dt_s) > 1e-12) {
    throw ConfigError("cannot compare: runs cover different horizons (" +
                      std::to_string(a.rows) + " rows at " + num(a.dt_s) + " s vs " +
                      std::to_string(b.rows) + " rows at " + num(b.dt_s) + " s)");
  }

  CompareReport rep;
  std::ostringstream os;
  os << "baseline : " << a.scenario << " (" << a.coupling << ", " << a.model << ") "
     << dir_baseline << "\n";
  os << "candidate: " << b.scenario << " (" << b.coupling << ", " << b.model << ") "
     << dir_candidate << "\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %14s %14s %14s  %s\n", "metric", "baseline",
                "candidate", "delta", "verdict");
  os << line;

  const auto verdict = [&](double base, double cand, bool headline) {
    const double tol = 1e-9 + 1e-3 * std::abs(base);
    const double d = cand - base;
    const char* v = d > tol ? "regressed" : (d < -tol ? "improved" : "unchanged");
    if (headline && d > tol) rep.regression = true;
    return v;
  };
  const auto row = [&](const std::string& name, double base, double cand, bool headline) {
    std::snprintf(line, sizeof line, "%-28s %14s %14s %14s  %s\n", name.c_str(),
                  num(base).c_str(), num(cand).c_str(), num(cand - base).c_str(),
                  verdict(base, cand, headline));
    os << line;
  };

  row("system_ace_std_mw", a.system_ace_std_mw, b.system_ace_std_mw, true);
  row("max_abs_freq_coi_hz", a.max_abs_freq_coi_hz, b.max_abs_freq_coi_hz, true);
  for (const auto& [id, sa] : a.areas) {
    const auto it = b.areas.find(id);
    if (it == b.areas.end()) continue;
    const std::string tag = "area" + std::to_string(id);
    row(tag + "_ace_std_mw", sa.ace_std_mw, it->second.ace_std_mw, false);
    row(tag + "_max_abs_freq_hz", sa.max_abs_freq_hz, it->second.max_abs_freq_hz, false);
    row(tag + "_max_abs_tie_dev_mw", sa.max_abs_tie_dev_mw, it->second.max_abs_tie_dev_mw, false);
  }
  row("violations", static_cast<double>(a.violations), static_cast<double>(b.violations), true);
  row("warnings", static_cast<double>(a.warnings), static_cast<double>(b.warnings), false);

  os << "\nresult: " << (rep.regression ? "REGRESSION" : "OK") << "\n";
  rep.text = os.str();
  return rep;
}

}  // namespace tdcosim::metrics
