#pragma once

#include <stdexcept>
#include <string>

namespace patchdyn {

/// Input outside the mathematical domain of an operation (e.g. log of a
/// nonpositive density, non-positive physical rate).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Parameter block violates a stated bound (e.g. 0 < e < 1 in strict mode).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside the regime it is defined for.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative numerics failed (bracketing, Newton divergence, step collapse).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Theorem-based classification disagrees with the numeric eigenvalues.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace patchdyn
