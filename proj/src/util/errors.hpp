#pragma once

#include <stdexcept>
#include <string>

namespace pidmrl::util {

// Bad dimensions, bad config values, unknown keys. CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Manifest mismatch or unreadable/unwritable checkpoint.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite gradients or losses during optimization.
struct TrainingDivergence : std::runtime_error {
  explicit TrainingDivergence(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace pidmrl::util
