#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdcosim/transmission/system.hpp"

namespace tdcosim::scenario {

struct ExperimentInfo {
  std::string name;
  std::string summary;
};

/// Built-in scenario presets the CLI can run by name.
const std::vector<ExperimentInfo>& experiment_catalog();
bool experiment_exists(const std::string& name);

/// Two-area nine-bus dynamic test system (three machines, two tie lines,
/// PCC load buses 5, 6, 8). lossless drops all series resistance, which
/// makes droop arithmetic exact.
transmission::TransmissionSystem two_area_case(bool lossless = false);

/// Writes every input file for the named preset (case, feeders, profiles,
/// roster, scenario) into dir and returns the scenario file path. The seed
/// drives the generated irradiance noise and is recorded in the scenario.
std::string build_experiment(const std::string& name, std::uint64_t seed,
                             const std::string& dir);

}  // namespace tdcosim::scenario
