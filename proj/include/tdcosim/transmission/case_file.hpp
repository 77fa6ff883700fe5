#pragma once

#include <iosfwd>
#include <string>

#include "tdcosim/transmission/system.hpp"

namespace tdcosim::transmission {

TransmissionSystem read_case(std::istream& in, const std::string& filename);
TransmissionSystem load_case(const std::string& path);
void write_case(std::ostream& out, const TransmissionSystem& sys);
void save_case(const std::string& path, const TransmissionSystem& sys);

}  // namespace tdcosim::transmission
