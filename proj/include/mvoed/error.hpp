#pragma once

#include <stdexcept>
#include <string>

namespace mvoed {

/// Bad or inconsistent user configuration (unknown model, bad bounds,
/// pathological obstacle layout, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A Monte Carlo estimate could not be formed (non-finite forward output,
/// too many degenerate outer samples, ...).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mvoed
