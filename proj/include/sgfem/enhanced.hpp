#pragma once

#include "sgfem/galerkin.hpp"

namespace sgfem::galerkin {

/// Galerkin solution on V̂ = X̂⊗P + X⊗Q, with X̂ the space on the uniform
/// refinement and X the space on the coarse mesh.
struct EnhancedSolution {
  /// Û: fine-mesh coefficients for the members of P.
  Eigen::MatrixXd fine_block;
  /// W: coarse-mesh coefficients for the members of Q.
  Eigen::MatrixXd coarse_block;
  /// û represented on (T̂, P ∪ Q); Q-columns hold the interpolated W.
  GalerkinSolution combined;
  SolveStats stats;
  std::size_t dim = 0;  // dim V̂
};

/// Operator and preconditioner of the enhanced system, shared by the solver
/// and by tests that need to apply it.
class EnhancedSystem {
 public:
  EnhancedSystem(const mesh::TwoLevelOverlay& overlay, const param::IndexSet& active,
                 const param::IndexSet& detail, const model::ProblemSpec& spec);

  std::size_t fine_rows() const;
  std::size_t coarse_rows() const;
  std::size_t size() const;

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;
  Eigen::VectorXd load() const;

  EnhancedSolution solve(const SolverOptions& options) const;

  const Discretization& fine() const { return fine_; }
  const param::IndexSet& active() const { return active_; }
  const param::IndexSet& detail() const { return detail_; }

 private:
  param::IndexSet active_;
  param::IndexSet detail_;
  Discretization fine_;  // on (T̂, P ∪ Q)
  std::shared_ptr<StiffnessFamily> coarse_;
  Eigen::SparseMatrix<double> prolongation_;
};

EnhancedSolution solve_enhanced(const mesh::TwoLevelOverlay& overlay, const param::IndexSet& active,
                                const param::IndexSet& detail, const model::ProblemSpec& spec,
                                const SolverOptions& options = {});

}  // namespace sgfem::galerkin
