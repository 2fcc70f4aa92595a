#pragma once

#include <stdexcept>
#include <string>

namespace ugift {

// Bad flags, bad config values, missing files. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed records, numerical divergence, anything that breaks mid-run.
// CLI maps this to exit code 1.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ugift
