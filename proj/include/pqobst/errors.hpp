#pragma once

#include <stdexcept>
#include <string>

namespace pqobst {

/// Precondition violated by the caller (bad sizes, non-finite input, infeasible data).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not available for this input (e.g. gradient of a table without slopes).
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An inner optimization hit its iteration cap. Carries the best value found and
/// an estimate of how far it may be from the optimum.
class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, double best_value, double bound_gap)
      : std::runtime_error(what), best_value_(best_value), bound_gap_(bound_gap) {}

  double best_value() const { return best_value_; }
  double bound_gap() const { return bound_gap_; }

 private:
  double best_value_;
  double bound_gap_;
};

}  // namespace pqobst
