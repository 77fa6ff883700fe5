#pragma once

#include <optional>
#include <string>

#include "tdcosim/metrics/bundle.hpp"

namespace tdcosim::metrics {

/// Writes the run directory: one CSV per series family, a key-value summary,
/// and a manifest with a content hash per file. error marks an aborted run;
/// whatever rows exist are still written.
void emit_outputs(const std::string& dir, const MetricsBundle& bundle, double tc_tolerance_pu,
                  const std::optional<std::string>& error = {});

/// FNV-1a over a byte stream, as stamped into the manifest.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ull);

}  // namespace tdcosim::metrics
