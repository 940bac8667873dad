#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgfem/errors.hpp"

namespace sgfem::galerkin {

struct SolveStats {
  std::size_t iterations = 0;
  /// Final preconditioned relative residual sqrt(r·M⁻¹r / b·M⁻¹b).
  double residual = 0.0;
  std::vector<double> history;
};

/// Preconditioned conjugate gradients. `apply(x, y)` sets y = A x and
/// `precondition(r, z)` sets z = M⁻¹ r. x holds the initial guess on entry.
template <class Apply, class Precondition>
SolveStats pcg(Apply&& apply, Precondition&& precondition, const Eigen::VectorXd& b,
               Eigen::VectorXd& x, double tol, std::size_t max_iter) {
  SolveStats stats;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(n), p(n), q(n), r(n);
  precondition(b, z);
  const double bnorm2 = b.dot(z);
  if (!(bnorm2 > 0.0)) {
    x.setZero();
    stats.history.push_back(0.0);
    return stats;
  }
  apply(x, q);
  r = b - q;
  precondition(r, z);
  double rz = r.dot(z);
  stats.residual = std::sqrt(std::max(rz, 0.0) / bnorm2);
  stats.history.push_back(stats.residual);
  p = z;
  while (stats.residual > tol) {
    if (stats.iterations >= max_iter) {
      throw SolverFailure("pcg: no convergence after " + std::to_string(max_iter) +
                              " iterations (residual " + std::to_string(stats.residual) + ")",
                          stats.history);
    }
    apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      throw SolverFailure("pcg: operator not positive definite", stats.history);
    }
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    precondition(r, z);
    const double rz_next = r.dot(z);
    ++stats.iterations;
    stats.residual = std::sqrt(std::max(rz_next, 0.0) / bnorm2);
    stats.history.push_back(stats.residual);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return stats;
}

}  // namespace sgfem::galerkin
