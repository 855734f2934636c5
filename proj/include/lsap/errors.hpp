#pragma once

#include <stdexcept>
#include <string>

namespace lsap {

// Error taxonomy mirrors the CLI exit codes: config 2, artifact 3, numeric 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class ArtifactError : public std::runtime_error {
 public:
  explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lsap
