#include "tdcosim/bess/roster.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"

namespace tdcosim::bess {
namespace {

[[noreturn]] void fail(const std::string& file, int line, const std::string& what) {
  throw ParseError(file, line, what);
}

}  // namespace

std::vector<BessUnit::Params> read_roster(std::istream& in, const std::string& filename) {
  std::vector<BessUnit::Params> roster;
  std::set<std::string> seen;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(text::strip_comment(raw));
    if (line.empty()) continue;
    const auto tok = text::tokens(line);
    if (tok[0] != "bess") fail(filename, lineno, "expected 'bess' record, got '" + tok[0] + "'");
    if (tok.size() < 2) fail(filename, lineno, "bess record missing unit id");

    BessUnit::Params p;
    p.id = tok[1];
    if (!seen.insert(p.id).second) fail(filename, lineno, "duplicate unit id '" + p.id + "'");
    if (tok.size() % 2 != 0) fail(filename, lineno, "bess record has a dangling keyword");

    bool have_feeder = false;
    bool have_node = false;
    for (size_t i = 2; i + 1 < tok.size(); i += 2) {
      const std::string& key = tok[i];
      const std::string& val = tok[i + 1];
      const auto num = [&] {
        double v = 0;
        if (!text::parse_double(val, v))
          fail(filename, lineno, "bad number '" + val + "' for '" + key + "'");
        return v;
      };
      if (key == "feeder") {
        p.feeder = val;
        have_feeder = true;
      } else if (key == "node") {
        p.node = val;
        have_node = true;
      } else if (key == "phases") {
        p.phases = val;
      } else if (key == "p_kw") {
        p.p_rating_kw = num();
      } else if (key == "e_kwh") {
        p.e_rating_kwh = num();
      } else if (key == "soc_min") {
        p.soc_min = num();
      } else if (key == "soc_max") {
        p.soc_max = num();
      } else if (key == "eta_c") {
        p.eta_charge = num();
      } else if (key == "eta_d") {
        p.eta_discharge = num();
      } else if (key == "soc0") {
        p.soc_initial = num();
      } else {
        fail(filename, lineno, "unknown keyword '" + key + "' in bess record");
      }
    }
    if (!have_feeder) fail(filename, lineno, "bess '" + p.id + "' missing feeder");
    if (!have_node) fail(filename, lineno, "bess '" + p.id + "' missing node");
    try {
      BessUnit check(p);  // rejects bad ratings, SoC bounds, efficiencies
      (void)check;
    } catch (const ConfigError& e) {
      fail(filename, lineno, e.what());
    }
    roster.push_back(std::move(p));
  }
  return roster;
}

std::vector<BessUnit::Params> load_roster(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open roster file '" + path + "'");
  return read_roster(in, path);
}

void write_roster(std::ostream& out, const std::vector<BessUnit::Params>& roster) {
  char buf[512];
  for (const auto& p : roster) {
    std::snprintf(buf, sizeof buf,
                  "bess %s feeder %s node %s phases %s p_kw %.17g e_kwh %.17g"
                  " soc_min %.17g soc_max %.17g eta_c %.17g eta_d %.17g soc0 %.17g\n",
                  p.id.c_str(), p.feeder.c_str(), p.node.c_str(), p.phases.c_str(), p.p_rating_kw,
                  p.e_rating_kwh, p.soc_min, p.soc_max, p.eta_charge, p.eta_discharge,
                  p.soc_initial);
    out << buf;
  }
}

void save_roster(const std::string& path, const std::vector<BessUnit::Params>& roster) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write roster file '" + path + "'");
  write_roster(out, roster);
}

}  // namespace tdcosim::bess
