#include "tdcosim/distribution/feeder_file.hpp"

#include <fstream>
#include <sstream>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"

namespace tdcosim::distribution {

namespace {

double need_number(const std::vector<std::string>& tok, std::size_t i,
                   const std::string& file, int line, const std::string& what) {
  if (i >= tok.size()) throw ParseError(file, line, "missing " + what);
  double v = 0.0;
  if (!text::parse_double(tok[i], v)) {
    throw ParseError(file, line, "bad number '" + tok[i] + "' for " + what);
  }
  return v;
}

int need_int(const std::vector<std::string>& tok, std::size_t i, const std::string& file,
             int line, const std::string& what) {
  if (i >= tok.size()) throw ParseError(file, line, "missing " + what);
  int v = 0;
  if (!text::parse_int(tok[i], v)) {
    throw ParseError(file, line, "bad integer '" + tok[i] + "' for " + what);
  }
  return v;
}

std::string need_str(const std::vector<std::string>& tok, std::size_t i,
                     const std::string& file, int line, const std::string& what) {
  if (i >= tok.size()) throw ParseError(file, line, "missing " + what);
  return tok[i];
}

void expect_key(const std::vector<std::string>& tok, std::size_t i, const std::string& key,
                const std::string& file, int line) {
  if (i >= tok.size() || tok[i] != key) {
    throw ParseError(file, line, "expected keyword '" + key + "'");
  }
}

}  // namespace

Feeder read_feeder(std::istream& in, const std::string& filename) {
  Feeder f;
  std::string raw;
  int lineno = 0;
  int pending_zrows = 0;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::strip_comment(raw);
    if (line.empty()) continue;
    const auto tok = text::tokens(line);
    const std::string& rec = tok[0];

    if (pending_zrows > 0 && rec != "zrow") {
      throw ParseError(filename, lineno, "expected " + std::to_string(pending_zrows) +
                                             " more zrow line(s) for line config '" +
                                             f.line_configs.back().name + "'");
    }

    if (rec == "feeder") {
      f.id = need_str(tok, 1, filename, lineno, "feeder id");
    } else if (rec == "head") {
      f.head_node = need_int(tok, 1, filename, lineno, "head node");
    } else if (rec == "vlimits") {
      f.vmin_pu = need_number(tok, 1, filename, lineno, "lower voltage limit");
      f.vmax_pu = need_number(tok, 2, filename, lineno, "upper voltage limit");
    } else if (rec == "lineconfig") {
      LineConfig c;
      c.name = need_str(tok, 1, filename, lineno, "line config name");
      f.line_configs.push_back(c);
      pending_zrows = 3;
    } else if (rec == "zrow") {
      if (pending_zrows == 0) {
        throw ParseError(filename, lineno, "zrow outside a lineconfig block");
      }
      if (tok.size() != 7) {
        throw ParseError(filename, lineno, "zrow needs 6 numbers (r x per phase column)");
      }
      auto& z = f.line_configs.back().z_per_km;
      const auto row = static_cast<std::size_t>(3 - pending_zrows);
      for (std::size_t c = 0; c < 3; ++c) {
        const double r = need_number(tok, 1 + 2 * c, filename, lineno, "zrow r");
        const double x = need_number(tok, 2 + 2 * c, filename, lineno, "zrow x");
        z[row][c] = Complex(r, x);
      }
      --pending_zrows;
    } else if (rec == "node") {
      Node n;
      n.id = need_int(tok, 1, filename, lineno, "node id");
      expect_key(tok, 2, "kv", filename, lineno);
      n.base_kv_ll = need_number(tok, 3, filename, lineno, "node kv");
      expect_key(tok, 4, "phases", filename, lineno);
      try {
        n.phases = parse_phases(need_str(tok, 5, filename, lineno, "node phases"));
      } catch (const ConfigError& e) {
        throw ParseError(filename, lineno, e.what());
      }
      f.nodes.push_back(n);
    } else if (rec == "line") {
      Segment s;
      s.from = need_int(tok, 1, filename, lineno, "line from node");
      s.to = need_int(tok, 2, filename, lineno, "line to node");
      expect_key(tok, 3, "length_km", filename, lineno);
      s.length_km = need_number(tok, 4, filename, lineno, "line length");
      expect_key(tok, 5, "config", filename, lineno);
      s.config = need_str(tok, 6, filename, lineno, "line config name");
      f.segments.push_back(s);
    } else if (rec == "xfmr") {
      Transformer t;
      t.from = need_int(tok, 1, filename, lineno, "xfmr from node");
      t.to = need_int(tok, 2, filename, lineno, "xfmr to node");
      expect_key(tok, 3, "r_ohm", filename, lineno);
      t.r_ohm = need_number(tok, 4, filename, lineno, "xfmr r");
      expect_key(tok, 5, "x_ohm", filename, lineno);
      t.x_ohm = need_number(tok, 6, filename, lineno, "xfmr x");
      expect_key(tok, 7, "ratio", filename, lineno);
      t.ratio = need_number(tok, 8, filename, lineno, "xfmr ratio");
      f.transformers.push_back(t);
    } else if (rec == "load") {
      Load l;
      l.node = need_int(tok, 1, filename, lineno, "load node");
      expect_key(tok, 2, "phase", filename, lineno);
      const std::string ph = need_str(tok, 3, filename, lineno, "load phase");
      if (ph == "a") l.phase = 0;
      else if (ph == "b") l.phase = 1;
      else if (ph == "c") l.phase = 2;
      else throw ParseError(filename, lineno, "load phase must be a, b, or c");
      expect_key(tok, 4, "p_kw", filename, lineno);
      l.p_kw = need_number(tok, 5, filename, lineno, "load p_kw");
      expect_key(tok, 6, "q_kvar", filename, lineno);
      l.q_kvar = need_number(tok, 7, filename, lineno, "load q_kvar");
      f.loads.push_back(l);
    } else if (rec == "pv") {
      PvSystem p;
      p.id = need_str(tok, 1, filename, lineno, "pv id");
      expect_key(tok, 2, "node", filename, lineno);
      p.node = need_int(tok, 3, filename, lineno, "pv node");
      expect_key(tok, 4, "phases", filename, lineno);
      try {
        p.phases = parse_phases(need_str(tok, 5, filename, lineno, "pv phases"));
      } catch (const ConfigError& e) {
        throw ParseError(filename, lineno, e.what());
      }
      expect_key(tok, 6, "rating_kw", filename, lineno);
      p.rating_kw = need_number(tok, 7, filename, lineno, "pv rating");
      expect_key(tok, 8, "profile", filename, lineno);
      p.profile_id = need_str(tok, 9, filename, lineno, "pv profile id");
      f.pv_systems.push_back(p);
    } else if (rec == "bess") {
      BessAttachment b;
      b.unit_id = need_str(tok, 1, filename, lineno, "bess unit id");
      expect_key(tok, 2, "node", filename, lineno);
      b.node = need_int(tok, 3, filename, lineno, "bess node");
      expect_key(tok, 4, "phases", filename, lineno);
      try {
        b.phases = parse_phases(need_str(tok, 5, filename, lineno, "bess phases"));
      } catch (const ConfigError& e) {
        throw ParseError(filename, lineno, e.what());
      }
      f.bess_attachments.push_back(b);
    } else {
      throw ParseError(filename, lineno, "unknown record '" + rec + "'");
    }
  }
  if (pending_zrows > 0) {
    throw ParseError(filename, lineno, "file ended inside a lineconfig block");
  }
  try {
    f.validate();
  } catch (const ConfigError& e) {
    throw ParseError(filename, lineno, e.what());
  }
  return f;
}

Feeder load_feeder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feeder file '" + path + "'");
  return read_feeder(in, path);
}

void write_feeder(std::ostream& out, const Feeder& f) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "feeder " << f.id << "\n";
  out << "head " << f.head_node << "\n";
  out << "vlimits " << num(f.vmin_pu) << " " << num(f.vmax_pu) << "\n";
  for (const auto& c : f.line_configs) {
    out << "lineconfig " << c.name << "\n";
    for (std::size_t r = 0; r < 3; ++r) {
      out << "zrow";
      for (std::size_t col = 0; col < 3; ++col) {
        out << " " << num(c.z_per_km[r][col].real()) << " " << num(c.z_per_km[r][col].imag());
      }
      out << "\n";
    }
  }
  for (const auto& n : f.nodes) {
    out << "node " << n.id << " kv " << num(n.base_kv_ll) << " phases " << phases_name(n.phases)
        << "\n";
  }
  for (const auto& s : f.segments) {
    out << "line " << s.from << " " << s.to << " length_km " << num(s.length_km) << " config "
        << s.config << "\n";
  }
  for (const auto& t : f.transformers) {
    out << "xfmr " << t.from << " " << t.to << " r_ohm " << num(t.r_ohm) << " x_ohm "
        << num(t.x_ohm) << " ratio " << num(t.ratio) << "\n";
  }
  for (const auto& l : f.loads) {
    out << "load " << l.node << " phase " << "abc"[l.phase] << " p_kw " << num(l.p_kw)
        << " q_kvar " << num(l.q_kvar) << "\n";
  }
  for (const auto& p : f.pv_systems) {
    out << "pv " << p.id << " node " << p.node << " phases " << phases_name(p.phases)
        << " rating_kw " << num(p.rating_kw) << " profile " << p.profile_id << "\n";
  }
  for (const auto& b : f.bess_attachments) {
    out << "bess " << b.unit_id << " node " << b.node << " phases " << phases_name(b.phases)
        << "\n";
  }
}

void save_feeder(const std::string& path, const Feeder& feeder) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write feeder file '" + path + "'");
  write_feeder(out, feeder);
  if (!out.good()) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace tdcosim::distribution
