#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sgfem {

/// Input outside an operation's domain: bad marks, malformed files,
/// non-nested spaces, out-of-range parameters.
class InputDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Coefficient family violating the ellipticity conditions (tau >= 1,
/// non-positive mean field, divergent amplitude series).
class InadmissibleProblem : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operands live on different (mesh, index set) pairs.
class SpaceMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal guarantee (weak marking, error-reduction bound) failed.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

}  // namespace sgfem
