#pragma once

#include <stdexcept>
#include <string>

namespace mrisk {

/// Malformed scenario, bad parameters, or an operation applied outside its
/// domain.  Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A modelling precondition does not hold (non-martingale input, violated
/// structure assumption, corollary predicate not satisfied).  Exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An identity that must hold by construction failed.  Exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mrisk
