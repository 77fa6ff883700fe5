#include "tdcosim/transmission/case_file.hpp"

#include <fstream>
#include <sstream>

#include "tdcosim/common/errors.hpp"
#include "tdcosim/common/text.hpp"

namespace tdcosim::transmission {

namespace {

/// Walks "<keyword> <value...>" pairs after the fixed positional tokens.
class FieldCursor {
public:
  FieldCursor(const std::vector<std::string>& tok, std::size_t start,
              const std::string& file, int line)
      : tok_(tok), at_(start), file_(file), line_(line) {}

  bool done() const { return at_ >= tok_.size(); }

  std::string keyword() {
    if (done()) fail("expected a keyword");
    return tok_[at_++];
  }

  std::string value(const std::string& key) {
    if (done()) fail("keyword '" + key + "' needs a value");
    return tok_[at_++];
  }

  double number(const std::string& key) {
    double v = 0.0;
    const std::string s = value(key);
    if (!text::parse_double(s, v)) fail("bad number '" + s + "' for '" + key + "'");
    return v;
  }

  int integer(const std::string& key) {
    int v = 0;
    const std::string s = value(key);
    if (!text::parse_int(s, v)) fail("bad integer '" + s + "' for '" + key + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(file_, line_, what);
  }

private:
  const std::vector<std::string>& tok_;
  std::size_t at_;
  std::string file_;
  int line_;
};

}  // namespace

TransmissionSystem read_case(std::istream& in, const std::string& filename) {
  TransmissionSystem sys;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::strip_comment(raw);
    if (line.empty()) continue;
    const auto tok = text::tokens(line);
    const std::string& rec = tok[0];

    if (rec == "mva_base") {
      FieldCursor c(tok, 1, filename, lineno);
      sys.base_mva = c.number("mva_base");
    } else if (rec == "f_nominal_hz") {
      FieldCursor c(tok, 1, filename, lineno);
      sys.f_nominal_hz = c.number("f_nominal_hz");
    } else if (rec == "trip_delta_omega_pu") {
      FieldCursor c(tok, 1, filename, lineno);
      sys.trip_delta_omega_pu = c.number("trip_delta_omega_pu");
    } else if (rec == "bus") {
      if (tok.size() < 2) throw ParseError(filename, lineno, "expected: bus <id> ...");
      Bus b;
      FieldCursor c(tok, 1, filename, lineno);
      b.id = c.integer("bus id");
      while (!c.done()) {
        const std::string key = c.keyword();
        if (key == "area") {
          b.area = c.integer(key);
        } else if (key == "type") {
          const std::string t = c.value(key);
          if (t == "slack") b.type = BusType::slack;
          else if (t == "pv") b.type = BusType::pv;
          else if (t == "pq") b.type = BusType::pq;
          else c.fail("bus type must be slack, pv, or pq (got '" + t + "')");
        } else if (key == "kv") {
          b.base_kv = c.number(key);
        } else if (key == "vm") {
          b.vm_setpoint = c.number(key);
        } else if (key == "va_deg") {
          b.va_setpoint_deg = c.number(key);
        } else if (key == "load") {
          b.p_load_mw = c.number("load P");
          b.q_load_mvar = c.number("load Q");
        } else if (key == "pcc") {
          b.is_pcc = true;
        } else {
          c.fail("unknown bus keyword '" + key + "'");
        }
      }
      sys.buses.push_back(b);
    } else if (rec == "branch") {
      if (tok.size() < 3) throw ParseError(filename, lineno, "expected: branch <from> <to> ...");
      Branch br;
      FieldCursor c(tok, 1, filename, lineno);
      br.from = c.integer("from bus");
      br.to = c.integer("to bus");
      while (!c.done()) {
        const std::string key = c.keyword();
        if (key == "r") br.r_pu = c.number(key);
        else if (key == "x") br.x_pu = c.number(key);
        else if (key == "b") br.b_pu = c.number(key);
        else c.fail("unknown branch keyword '" + key + "'");
      }
      sys.branches.push_back(br);
    } else if (rec == "gen") {
      if (tok.size() < 2) throw ParseError(filename, lineno, "expected: gen <id> ...");
      GeneratorUnit g;
      FieldCursor c(tok, 1, filename, lineno);
      g.id = c.value("gen id");
      while (!c.done()) {
        const std::string key = c.keyword();
        if (key == "bus") g.bus = c.integer(key);
        else if (key == "mva") g.mva = c.number(key);
        else if (key == "h") g.h_s = c.number(key);
        else if (key == "d") g.d_pu = c.number(key);
        else if (key == "xdp") g.xdp_pu = c.number(key);
        else if (key == "r") g.r_droop = c.number(key);
        else if (key == "tg") g.tg_s = c.number(key);
        else if (key == "tt") g.tt_s = c.number(key);
        else if (key == "p") g.p_sched_mw = c.number(key);
        else if (key == "agc") {
          g.agc = true;
          g.headroom_up_mw = c.number("agc up headroom");
          g.headroom_down_mw = c.number("agc down headroom");
        } else {
          c.fail("unknown gen keyword '" + key + "'");
        }
      }
      sys.generators.push_back(g);
    } else {
      throw ParseError(filename, lineno, "unknown record '" + rec + "'");
    }
  }
  try {
    sys.validate();
  } catch (const ConfigError& e) {
    throw ParseError(filename, lineno, e.what());
  }
  return sys;
}

TransmissionSystem load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open case file '" + path + "'");
  return read_case(in, path);
}

void write_case(std::ostream& out, const TransmissionSystem& sys) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "mva_base " << num(sys.base_mva) << "\n";
  out << "f_nominal_hz " << num(sys.f_nominal_hz) << "\n";
  out << "trip_delta_omega_pu " << num(sys.trip_delta_omega_pu) << "\n";
  for (const auto& b : sys.buses) {
    out << "bus " << b.id << " area " << b.area << " type "
        << (b.type == BusType::slack ? "slack" : b.type == BusType::pv ? "pv" : "pq")
        << " kv " << num(b.base_kv);
    if (b.type != BusType::pq) out << " vm " << num(b.vm_setpoint);
    if (b.type == BusType::slack) out << " va_deg " << num(b.va_setpoint_deg);
    if (b.p_load_mw != 0.0 || b.q_load_mvar != 0.0) {
      out << " load " << num(b.p_load_mw) << " " << num(b.q_load_mvar);
    }
    if (b.is_pcc) out << " pcc";
    out << "\n";
  }
  for (const auto& g : sys.generators) {
    out << "gen " << g.id << " bus " << g.bus << " mva " << num(g.mva) << " h " << num(g.h_s)
        << " d " << num(g.d_pu) << " xdp " << num(g.xdp_pu) << " r " << num(g.r_droop)
        << " tg " << num(g.tg_s) << " tt " << num(g.tt_s) << " p " << num(g.p_sched_mw);
    if (g.agc) out << " agc " << num(g.headroom_up_mw) << " " << num(g.headroom_down_mw);
    out << "\n";
  }
  for (const auto& br : sys.branches) {
    out << "branch " << br.from << " " << br.to << " r " << num(br.r_pu) << " x "
        << num(br.x_pu) << " b " << num(br.b_pu) << "\n";
  }
}

void save_case(const std::string& path, const TransmissionSystem& sys) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write case file '" + path + "'");
  write_case(out, sys);
  if (!out.good()) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace tdcosim::transmission
