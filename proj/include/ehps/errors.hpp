#pragma once

#include <stdexcept>
#include <string>

namespace ehps {

/// Malformed or invariant-violating input data (files, records, models).
/// The message carries the field path or line number of the offending entry.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Point configuration too degenerate for a similarity fit.
class degenerate_geometry_error : public std::runtime_error {
 public:
  explicit degenerate_geometry_error(const std::string& what) : std::runtime_error(what) {}
};

/// Optimization diverged (NaN loss); message names the failing step.
class training_failure_error : public std::runtime_error {
 public:
  training_failure_error(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ehps
