#pragma once

#include <stdexcept>
#include <string>

namespace floodal {

// Invalid configuration values or malformed config files. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or corrupt data files (tiles, manifests, reports). CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while running (divergent training, exhausted pools). CLI exit code 4.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace floodal
