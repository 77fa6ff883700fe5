#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdcosim/agc/filter_pi.hpp"
#include "tdcosim/bess/unit.hpp"
#include "tdcosim/distribution/feeder.hpp"
#include "tdcosim/scenario/profile.hpp"
#include "tdcosim/transmission/system.hpp"

namespace tdcosim::cosim {

enum class Coupling { tc, lc };
enum class Model { cosim, aggregated };

std::string coupling_name(Coupling c);
std::string model_name(Model m);

/// Simulation time grid. The three rates must nest exactly: the distribution
/// step is an integer number of transmission steps, the AGC interval an
/// integer number of distribution steps, the horizon an integer number of
/// distribution steps.
struct SimulationSchedule {
  double horizon_s = 3600.0;
  double dt_transmission_s = 0.001;
  double dt_distribution_s = 1.0;
  double dt_agc_s = 4.0;
  double tc_tolerance_pu = 1e-4;
  int tc_max_iterations = 20;

  int transmission_steps_per_distribution() const;
  int distribution_steps_per_agc() const;
  long long distribution_steps() const;
  void validate() const;
};

/// Attaches one feeder file to a transmission PCC bus.
struct FeederBinding {
  std::string feeder_file;
  int pcc_bus = 0;
  std::string load_profile;
};

/// Additive load step at a transmission bus, active from t_s onward.
struct Disturbance {
  double t_s = 0.0;
  int bus = 0;
  double dp_mw = 0.0;
  double dq_mvar = 0.0;
};

struct AreaConfig {
  int area_id = 0;
  double beta_mw_per_hz = 100.0;
  agc::FilterPi::Params conventional;
  agc::FilterPi::Params bess;
};

/// Fully resolved scenario: every referenced file loaded, profiles resampled
/// to the distribution step.
struct ScenarioConfig {
  std::string name = "scenario";
  Coupling coupling = Coupling::tc;
  Model model = Model::cosim;
  std::uint64_t seed = 0;
  int start_clock_s = 12 * 3600;  // wall clock mapped to simulation t=0
  bool agc_enabled = true;
  bool daa_include_efficiency = true;
  bool tie_schedule_auto = true;
  std::vector<std::pair<int, double>> tie_schedule_mw;  // area -> export MW

  SimulationSchedule schedule;
  transmission::TransmissionSystem system;
  std::vector<FeederBinding> bindings;
  std::vector<distribution::Feeder> feeders;  // aligned with bindings
  std::vector<scenario::Profile> profiles;
  std::vector<bess::BessUnit::Params> roster;
  std::vector<AreaConfig> areas;
  std::vector<std::pair<std::string, double>> participation;  // gen id -> factor
  std::vector<Disturbance> disturbances;

  const scenario::Profile* find_profile(const std::string& id) const;
  const AreaConfig* find_area(int area_id) const;

  /// Cross-file consistency: bindings against the case, rosters against
  /// feeder attachments, profile windows against the horizon, participation
  /// factors against the generator set.
  void validate() const;
};

/// Parses a scenario file and loads everything it references (paths are
/// relative to the scenario file), then validates the assembled bundle.
ScenarioConfig load_scenario(const std::string& path);

}  // namespace tdcosim::cosim
