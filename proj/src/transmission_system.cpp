#include "tdcosim/transmission/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "tdcosim/common/errors.hpp"

namespace tdcosim::transmission {

int TransmissionSystem::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return static_cast<int>(i);
  }
  return -1;
}

const Bus& TransmissionSystem::bus(int bus_id) const {
  const int i = bus_index(bus_id);
  if (i < 0) throw ConfigError("unknown bus " + std::to_string(bus_id));
  return buses[static_cast<std::size_t>(i)];
}

std::vector<int> TransmissionSystem::area_ids() const {
  std::set<int> s;
  for (const auto& b : buses) s.insert(b.area);
  return {s.begin(), s.end()};
}

std::vector<int> TransmissionSystem::pcc_buses() const {
  std::vector<int> out;
  for (const auto& b : buses) {
    if (b.is_pcc) out.push_back(b.id);
  }
  return out;
}

bool TransmissionSystem::is_tie(const Branch& br) const {
  return bus(br.from).area != bus(br.to).area;
}

void TransmissionSystem::validate() const {
  if (!(base_mva > 0.0)) throw ConfigError("base MVA must be positive");
  if (!(f_nominal_hz > 0.0)) throw ConfigError("nominal frequency must be positive");
  if (!(trip_delta_omega_pu > 0.0)) throw ConfigError("trip threshold must be positive");
  if (buses.empty()) throw ConfigError("no buses");

  std::set<int> ids;
  int slack_count = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) {
      throw ConfigError("duplicate bus id " + std::to_string(b.id));
    }
    if (!(b.base_kv > 0.0)) {
      throw ConfigError("bus " + std::to_string(b.id) + ": base kV must be positive");
    }
    if (b.type == BusType::slack) ++slack_count;
    if (b.type != BusType::pq && !(b.vm_setpoint > 0.0)) {
      throw ConfigError("bus " + std::to_string(b.id) + ": voltage setpoint must be positive");
    }
  }
  if (slack_count != 1) {
    throw ConfigError("exactly one slack bus required, found " + std::to_string(slack_count));
  }

  for (const auto& br : branches) {
    if (bus_index(br.from) < 0 || bus_index(br.to) < 0) {
      throw ConfigError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                        " references an unknown bus");
    }
    if (br.from == br.to) {
      throw ConfigError("branch with identical endpoints at bus " + std::to_string(br.from));
    }
    if (std::abs(br.r_pu) + std::abs(br.x_pu) <= 0.0) {
      throw ConfigError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                        " has zero impedance");
    }
  }

  // Connectivity over the branch graph.
  std::vector<int> stack{buses.front().id};
  std::set<int> seen{buses.front().id};
  while (!stack.empty()) {
    const int at = stack.back();
    stack.pop_back();
    for (const auto& br : branches) {
      int other = -1;
      if (br.from == at) other = br.to;
      if (br.to == at) other = br.from;
      if (other >= 0 && seen.insert(other).second) stack.push_back(other);
    }
  }
  if (seen.size() != buses.size()) {
    for (const auto& b : buses) {
      if (!seen.count(b.id)) {
        throw ConfigError("network is disconnected: bus " + std::to_string(b.id) +
                          " is unreachable from bus " + std::to_string(buses.front().id));
      }
    }
  }

  std::set<int> gen_buses;
  std::set<std::string> gen_ids;
  for (const auto& g : generators) {
    if (g.id.empty()) throw ConfigError("generator with empty id");
    if (!gen_ids.insert(g.id).second) throw ConfigError("duplicate generator id '" + g.id + "'");
    const int bi = bus_index(g.bus);
    if (bi < 0) {
      throw ConfigError("generator '" + g.id + "' on unknown bus " + std::to_string(g.bus));
    }
    if (!gen_buses.insert(g.bus).second) {
      throw ConfigError("more than one generator on bus " + std::to_string(g.bus));
    }
    if (buses[static_cast<std::size_t>(bi)].type == BusType::pq) {
      throw ConfigError("generator '" + g.id + "' sits on PQ bus " + std::to_string(g.bus));
    }
    if (!(g.mva > 0.0)) throw ConfigError("generator '" + g.id + "': MVA must be positive");
    if (!(g.h_s > 0.0)) throw ConfigError("generator '" + g.id + "': H must be positive");
    if (!(g.xdp_pu > 0.0)) {
      throw ConfigError("generator '" + g.id + "': transient reactance must be positive");
    }
    if (!(g.r_droop > 0.0)) throw ConfigError("generator '" + g.id + "': droop must be positive");
    if (g.d_pu < 0.0 || g.tg_s < 0.0 || g.tt_s < 0.0) {
      throw ConfigError("generator '" + g.id + "': D, Tg, Tt must be non-negative");
    }
    if (g.headroom_up_mw < 0.0 || g.headroom_down_mw < 0.0) {
      throw ConfigError("generator '" + g.id + "': headroom must be non-negative");
    }
  }
  for (const auto& b : buses) {
    if (b.type != BusType::pq && !gen_buses.count(b.id)) {
      throw ConfigError("bus " + std::to_string(b.id) +
                        " is a generator-type bus without a generator");
    }
  }
}

}  // namespace tdcosim::transmission
