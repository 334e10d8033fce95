#pragma once

#include <stdexcept>
#include <string>

namespace siglqc {

// Bad configuration or problem file (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-PD Hessian, flagged-path abort (CLI exit code 2).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace siglqc
