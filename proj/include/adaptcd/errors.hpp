#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adaptcd {

/// Two vectors that must share a dimension do not.
class dimension_error : public std::invalid_argument {
 public:
  dimension_error(std::size_t expected, std::size_t actual, const std::string& what)
      : std::invalid_argument(what + ": dimension mismatch (expected " + std::to_string(expected) +
                              ", got " + std::to_string(actual) + ")"),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// A non-finite value appeared where only finite values are allowed.
class numeric_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration (bad step scale, radius, window, ...).
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input data: CSV rows, frames, baselines.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not permitted in the current state, e.g. updating a stopped detector.
class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Threshold calibration could not bracket the target.
class calibration_error : public std::runtime_error {
 public:
  calibration_error(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}

  double last_lo() const noexcept { return lo_; }
  double last_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace adaptcd
