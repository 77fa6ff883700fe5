#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdcosim::text {

std::string trim(std::string_view s);

/// Splits on whitespace runs; no empty tokens.
std::vector<std::string> tokens(std::string_view line);

/// Splits "key=value" into its two halves; nullopt if '=' is absent.
std::optional<std::pair<std::string, std::string>> key_value(std::string_view tok);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);

/// Strips a trailing "# comment" and surrounding whitespace.
std::string strip_comment(std::string_view line);

}  // namespace tdcosim::text
