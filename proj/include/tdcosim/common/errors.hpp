#pragma once

#include <stdexcept>
#include <string>

namespace tdcosim {

/// Invalid or inconsistent input data (topology, schedule, device references).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file. Carries the source location that failed.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }

private:
  std::string file_;
  int line_;
};

/// A numerical solve failed to converge or a state left its valid region.
class SolveError : public std::runtime_error {
public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tdcosim
