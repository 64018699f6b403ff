#pragma once

#include <stdexcept>
#include <string>

namespace feslab {

/// Invalid or inconsistent user-supplied configuration. The CLI maps this to
/// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite state or diverged computation. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace feslab
