#include "tdcosim/metrics/emit.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::metrics {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV cell: quotes anything holding a comma, quote, or newline.
std::string cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class RunWriter {
public:
  explicit RunWriter(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << content;
    hashes_.emplace_back(name, fnv1a64(content.data(), content.size()));
  }

  const std::vector<std::pair<std::string, std::uint64_t>>& hashes() const { return hashes_; }

private:
  std::string dir_;
  std::vector<std::pair<std::string, std::uint64_t>> hashes_;
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void emit_outputs(const std::string& dir, const MetricsBundle& b, double tc_tolerance_pu,
                  const std::optional<std::string>& error) {
  RunWriter w(dir);
  const std::size_t rows = b.t_s.size();

  {
    std::ostringstream os;
    os << "t_s,freq_coi_hz";
    for (int a : b.area_ids) os << ",freq_a" << a << "_hz,tie_dev_a" << a << "_mw";
    os << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      os << num(b.t_s[r]) << ',' << num(b.freq_coi_hz[r]);
      for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
        os << ',' << num(b.freq_hz[ai][r]) << ',' << num(b.tie_dev_mw[ai][r]);
      }
      os << "\n";
    }
    w.write("frequency.csv", os.str());
  }

  {
    const auto system_ace = b.system_ace_mw();
    std::ostringstream os;
    os << "t_s,system_ace_mw";
    for (int a : b.area_ids) {
      os << ",ace_a" << a << "_mw,ace_b_a" << a << "_mw,ace_g_a" << a << "_mw,cmd_conv_a" << a
         << "_mw,cmd_bess_a" << a << "_mw";
    }
    os << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      os << num(b.t_s[r]) << ',' << num(system_ace[r]);
      for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
        os << ',' << num(b.ace_mw[ai][r]) << ',' << num(b.ace_b_mw[ai][r]) << ','
           << num(b.ace_g_mw[ai][r]) << ',' << num(b.cmd_conv_mw[ai][r]) << ','
           << num(b.cmd_bess_mw[ai][r]);
      }
      os << "\n";
    }
    w.write("ace.csv", os.str());
  }

  {
    const bool volts = !b.feeder_vmin_pu.empty();
    std::ostringstream os;
    os << "t_s";
    for (std::size_t fi = 0; fi < b.feeder_ids.size(); ++fi) {
      const auto& f = b.feeder_ids[fi];
      os << ",p_" << f << "_mw,q_" << f << "_mvar";
      if (volts) os << ",vmin_" << f << "_pu,vmax_" << f << "_pu";
    }
    os << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      os << num(b.t_s[r]);
      for (std::size_t fi = 0; fi < b.feeder_ids.size(); ++fi) {
        os << ',' << num(b.pcc_p_mw[fi][r]) << ',' << num(b.pcc_q_mvar[fi][r]);
        if (volts) {
          os << ',' << num(b.feeder_vmin_pu[fi][r]) << ',' << num(b.feeder_vmax_pu[fi][r]);
        }
      }
      os << "\n";
    }
    w.write("pcc.csv", os.str());
  }

  {
    std::ostringstream os;
    os << "t_s";
    for (const auto& u : b.unit_ids) os << ",kw_" << u << ",soc_" << u;
    os << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      os << num(b.t_s[r]);
      for (std::size_t ui = 0; ui < b.unit_ids.size(); ++ui) {
        os << ',' << num(b.bess_kw[ui][r]) << ',' << num(b.bess_soc[ui][r]);
      }
      os << "\n";
    }
    w.write("bess.csv", os.str());
  }

  {
    std::ostringstream os;
    os << "t_s,iterations,mismatch_pu\n";
    for (std::size_t r = 0; r < rows; ++r) {
      os << num(b.t_s[r]) << ',' << b.exchange_iterations[r] << ','
         << num(b.exchange_mismatch_pu[r]) << "\n";
    }
    w.write("coupling.csv", os.str());
  }

  {
    std::ostringstream os;
    os << "t_s,feeder,node,phase,v_pu\n";
    for (const auto& v : b.violations) {
      os << num(v.t_s) << ',' << cell(v.feeder) << ',' << v.node << ',' << "abc"[v.phase] << ','
         << num(v.v_pu) << "\n";
    }
    w.write("violations.csv", os.str());
  }

  {
    std::ostringstream os;
    os << "t_s,message\n";
    for (const auto& wv : b.warnings) os << num(wv.t_s) << ',' << cell(wv.message) << "\n";
    w.write("warnings.csv", os.str());
  }

  {
    std::ostringstream os;
    os << "scenario " << b.scenario_name << "\n"
       << "coupling " << b.coupling << "\n"
       << "model " << b.model << "\n"
       << "seed " << b.seed << "\n"
       << "dt_s " << num(b.dt_s) << "\n"
       << "rows " << rows << "\n";
    if (rows >= 2) {
      const auto s = b.compute_summary(tc_tolerance_pu);
      os << "system_ace_std_mw " << num(s.system_ace_std_mw) << "\n";
      for (std::size_t ai = 0; ai < b.area_ids.size(); ++ai) {
        os << "area " << b.area_ids[ai] << " ace_std_mw " << num(s.ace_std_mw[ai])
           << " max_abs_freq_hz " << num(s.max_abs_freq_hz[ai]) << " max_abs_tie_dev_mw "
           << num(s.max_abs_tie_dev_mw[ai]) << "\n";
      }
      os << "max_abs_freq_coi_hz " << num(s.max_abs_freq_coi_hz) << "\n"
         << "violations " << s.violation_count << "\n"
         << "warnings " << s.warning_count << "\n"
         << "exchange_mean_iterations " << num(s.exchange_mean_iterations) << "\n"
         << "exchange_max_iterations " << s.exchange_max_iterations << "\n"
         << "nonconverged_steps " << s.nonconverged_steps << "\n"
         << "tc_tolerance_pu " << num(s.tc_tolerance_pu) << "\n";
    }
    if (error) os << "error " << *error << "\n";
    w.write("summary.txt", os.str());
  }

  {
    std::ostringstream os;
    os << "scenario " << b.scenario_name << "\n"
       << "coupling " << b.coupling << "\n"
       << "model " << b.model << "\n"
       << "seed " << b.seed << "\n"
       << "rows " << rows << "\n"
       << "status " << (error ? "aborted" : "ok") << "\n";
    if (error) os << "error " << *error << "\n";
    char hex[24];
    for (const auto& [name, hash] : w.hashes()) {
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
      os << "file " << name << " fnv1a " << hex << "\n";
    }
    const fs::path p = fs::path(dir) / "manifest.txt";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << os.str();
  }
}

}  // namespace tdcosim::metrics
