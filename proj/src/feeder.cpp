#include "tdcosim/distribution/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::distribution {

PhaseMask parse_phases(const std::string& s) {
  PhaseMask m = 0;
  for (char c : s) {
    if (c == 'a') m |= kPhaseA;
    else if (c == 'b') m |= kPhaseB;
    else if (c == 'c') m |= kPhaseC;
    else throw ConfigError("bad phase spec '" + s + "'");
  }
  if (m == 0) throw ConfigError("empty phase spec");
  return m;
}

std::string phases_name(PhaseMask m) {
  std::string s;
  if (m & kPhaseA) s += 'a';
  if (m & kPhaseB) s += 'b';
  if (m & kPhaseC) s += 'c';
  return s;
}

int phase_count(PhaseMask m) {
  return ((m & kPhaseA) ? 1 : 0) + ((m & kPhaseB) ? 1 : 0) + ((m & kPhaseC) ? 1 : 0);
}

int Feeder::node_index(int node_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == node_id) return static_cast<int>(i);
  }
  return -1;
}

const Node& Feeder::node(int node_id) const {
  const int i = node_index(node_id);
  if (i < 0) {
    throw ConfigError("feeder '" + id + "': unknown node " + std::to_string(node_id));
  }
  return nodes[static_cast<std::size_t>(i)];
}

const LineConfig& Feeder::line_config(const std::string& name) const {
  for (const auto& c : line_configs) {
    if (c.name == name) return c;
  }
  throw ConfigError("feeder '" + id + "': unknown line config '" + name + "'");
}

double Feeder::total_load_kw() const {
  double s = 0.0;
  for (const auto& l : loads) s += l.p_kw;
  return s;
}

double Feeder::total_load_kvar() const {
  double s = 0.0;
  for (const auto& l : loads) s += l.q_kvar;
  return s;
}

double Feeder::total_pv_rating_kw() const {
  double s = 0.0;
  for (const auto& p : pv_systems) s += p.rating_kw;
  return s;
}

void Feeder::validate() const {
  if (id.empty()) throw ConfigError("feeder with empty id");
  if (nodes.empty()) throw ConfigError("feeder '" + id + "' has no nodes");
  if (!(vmin_pu > 0.0) || !(vmax_pu > vmin_pu)) {
    throw ConfigError("feeder '" + id + "': bad voltage limits");
  }
  std::set<int> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second) {
      throw ConfigError("feeder '" + id + "': duplicate node " + std::to_string(n.id));
    }
    if (!(n.base_kv_ll > 0.0)) {
      throw ConfigError("feeder '" + id + "': node " + std::to_string(n.id) +
                        " needs a positive base kV");
    }
    if (n.phases == 0 || n.phases > kPhaseAbc) {
      throw ConfigError("feeder '" + id + "': node " + std::to_string(n.id) + " has no phases");
    }
  }
  if (!ids.count(head_node)) {
    throw ConfigError("feeder '" + id + "': head node " + std::to_string(head_node) +
                      " does not exist");
  }

  for (const auto& c : line_configs) {
    for (int r = 0; r < 3; ++r) {
      for (int col = r + 1; col < 3; ++col) {
        if (std::abs(c.z_per_km[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] -
                     c.z_per_km[static_cast<std::size_t>(col)][static_cast<std::size_t>(r)]) >
            1e-12) {
          throw ConfigError("feeder '" + id + "': line config '" + c.name +
                            "' impedance matrix is not symmetric");
        }
      }
    }
  }

  // Edge list: segments plus transformers. Must form a tree rooted at head.
  struct Edge {
    int from, to;
  };
  std::vector<Edge> edges;
  for (const auto& s : segments) {
    if (node_index(s.from) < 0 || node_index(s.to) < 0) {
      throw ConfigError("feeder '" + id + "': segment " + std::to_string(s.from) + "-" +
                        std::to_string(s.to) + " references an unknown node");
    }
    if (!(s.length_km > 0.0)) {
      throw ConfigError("feeder '" + id + "': segment " + std::to_string(s.from) + "-" +
                        std::to_string(s.to) + " needs a positive length");
    }
    line_config(s.config);  // throws on unknown name
    edges.push_back({s.from, s.to});
  }
  for (const auto& t : transformers) {
    if (node_index(t.from) < 0 || node_index(t.to) < 0) {
      throw ConfigError("feeder '" + id + "': transformer " + std::to_string(t.from) + "-" +
                        std::to_string(t.to) + " references an unknown node");
    }
    if (!(t.ratio > 0.0)) {
      throw ConfigError("feeder '" + id + "': transformer " + std::to_string(t.from) + "-" +
                        std::to_string(t.to) + " needs a positive ratio");
    }
    if (t.r_ohm < 0.0 || (t.r_ohm == 0.0 && t.x_ohm == 0.0)) {
      throw ConfigError("feeder '" + id + "': transformer " + std::to_string(t.from) + "-" +
                        std::to_string(t.to) + " needs a nonzero series impedance");
    }
    edges.push_back({t.from, t.to});
  }

  if (edges.size() != nodes.size() - 1) {
    throw ConfigError("feeder '" + id + "': not radial (" + std::to_string(edges.size()) +
                      " connections for " + std::to_string(nodes.size()) + " nodes)");
  }
  // BFS from head; each node must be reached exactly once.
  std::vector<int> parent(nodes.size(), -2);
  parent[static_cast<std::size_t>(node_index(head_node))] = -1;
  std::vector<int> queue{head_node};
  std::size_t reached = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int at = queue[qi];
    for (const auto& e : edges) {
      int other = -1;
      if (e.from == at) other = e.to;
      else if (e.to == at) other = e.from;
      else continue;
      const auto oi = static_cast<std::size_t>(node_index(other));
      if (parent[oi] == -2) {
        parent[oi] = at;
        queue.push_back(other);
        ++reached;
      } else if (other != parent[static_cast<std::size_t>(node_index(at))]) {
        throw ConfigError("feeder '" + id + "': loop detected through nodes " +
                          std::to_string(at) + " and " + std::to_string(other));
      }
    }
  }
  if (reached != nodes.size()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (parent[i] == -2) {
        throw ConfigError("feeder '" + id + "': node " + std::to_string(nodes[i].id) +
                          " is not connected to the head");
      }
    }
  }
  // Downstream phases cannot exceed the parent's.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (parent[i] >= 0) {
      const Node& p = node(parent[i]);
      if ((nodes[i].phases & ~p.phases) != 0) {
        throw ConfigError("feeder '" + id + "': node " + std::to_string(nodes[i].id) +
                          " carries phases its parent " + std::to_string(p.id) + " lacks");
      }
    }
  }

  auto check_attachment = [&](int node_id, PhaseMask ph, const std::string& what) {
    const int i = node_index(node_id);
    if (i < 0) {
      throw ConfigError("feeder '" + id + "': " + what + " on unknown node " +
                        std::to_string(node_id));
    }
    if ((ph & ~nodes[static_cast<std::size_t>(i)].phases) != 0) {
      throw ConfigError("feeder '" + id + "': " + what + " uses phases absent at node " +
                        std::to_string(node_id));
    }
  };
  for (const auto& l : loads) {
    if (l.phase < 0 || l.phase > 2) {
      throw ConfigError("feeder '" + id + "': load phase out of range");
    }
    check_attachment(l.node, 1u << l.phase, "load");
    if (!std::isfinite(l.p_kw) || !std::isfinite(l.q_kvar)) {
      throw ConfigError("feeder '" + id + "': non-finite load at node " +
                        std::to_string(l.node));
    }
  }
  std::set<std::string> pv_ids;
  for (const auto& p : pv_systems) {
    if (p.id.empty()) throw ConfigError("feeder '" + id + "': PV system with empty id");
    if (!pv_ids.insert(p.id).second) {
      throw ConfigError("feeder '" + id + "': duplicate PV id '" + p.id + "'");
    }
    if (!(p.rating_kw > 0.0)) {
      throw ConfigError("feeder '" + id + "': PV '" + p.id + "' needs a positive rating");
    }
    check_attachment(p.node, p.phases, "PV '" + p.id + "'");
  }
  std::set<std::string> bess_ids;
  for (const auto& b : bess_attachments) {
    if (b.unit_id.empty()) throw ConfigError("feeder '" + id + "': BESS with empty unit id");
    if (!bess_ids.insert(b.unit_id).second) {
      throw ConfigError("feeder '" + id + "': duplicate BESS attachment '" + b.unit_id + "'");
    }
    check_attachment(b.node, b.phases, "BESS '" + b.unit_id + "'");
  }
}

AggregatedFeeder aggregate_feeder(const Feeder& feeder,
                                  const std::vector<BessRatingView>& units) {
  AggregatedFeeder a;
  a.load_kw = feeder.total_load_kw();
  a.load_kvar = feeder.total_load_kvar();
  a.pv_rating_kw = feeder.total_pv_rating_kw();
  double weighted = 0.0;
  for (const auto& u : units) {
    const bool attached =
        std::any_of(feeder.bess_attachments.begin(), feeder.bess_attachments.end(),
                    [&](const BessAttachment& b) { return b.unit_id == u.unit_id; });
    if (!attached) continue;
    a.bess_p_rating_kw += u.p_rating_kw;
    a.bess_e_rating_kwh += u.e_rating_kwh;
    weighted += u.soc * u.e_rating_kwh;
  }
  a.bess_soc = a.bess_e_rating_kwh > 0.0 ? weighted / a.bess_e_rating_kwh : 0.0;
  return a;
}

}  // namespace tdcosim::distribution
