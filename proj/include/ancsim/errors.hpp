#pragma once

#include <stdexcept>
#include <string>

namespace ancsim {

// Invalid or inconsistent run configuration (schema violations, bad
// parameter ranges). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system / parse failures, always carrying the offending path.
// Maps to CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace ancsim
