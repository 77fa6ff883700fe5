#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tdcosim/bess/unit.hpp"

namespace tdcosim::bess {

std::vector<BessUnit::Params> read_roster(std::istream& in, const std::string& filename);
std::vector<BessUnit::Params> load_roster(const std::string& path);
void write_roster(std::ostream& out, const std::vector<BessUnit::Params>& roster);
void save_roster(const std::string& path, const std::vector<BessUnit::Params>& roster);

}  // namespace tdcosim::bess
