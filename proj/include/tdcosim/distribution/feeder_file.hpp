#pragma once

#include <iosfwd>
#include <string>

#include "tdcosim/distribution/feeder.hpp"

namespace tdcosim::distribution {

Feeder read_feeder(std::istream& in, const std::string& filename);
Feeder load_feeder(const std::string& path);
void write_feeder(std::ostream& out, const Feeder& feeder);
void save_feeder(const std::string& path, const Feeder& feeder);

}  // namespace tdcosim::distribution
