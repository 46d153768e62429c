#pragma once

#include <stdexcept>
#include <string>

namespace camdrop {

// Invalid or inconsistent configuration (environment, planner, sweep).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called outside its contract (e.g. stepping a terminal
// state, empty trace, feature-dimension mismatch).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// State space larger than the enumeration cap.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Trajectory dataset unusable for training (missing label class, too small).
struct DatasetError : std::runtime_error {
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures surfaced by the CLI layer.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace camdrop
