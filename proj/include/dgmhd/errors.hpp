#pragma once

#include <stdexcept>
#include <string>

namespace dgmhd {

/// Bad arguments handed to a public entry point (sizes, degrees, bounds, ids).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs that are well-formed but numerically unusable (NaN/Inf).
class InvalidState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization or other one-time setup failed.
class SetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The solution became non-finite during time integration.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double last_good_time)
      : std::runtime_error(what), last_good_time_(last_good_time) {}

  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

}  // namespace dgmhd
