#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "sgfem/errors.hpp"
#include "sgfem/meshkit.hpp"
#include "sgfem/model.hpp"
#include "sgfem/paramkit.hpp"
#include "sgfem/pcg.hpp"
#include "sgfem/sparse.hpp"

namespace sgfem::galerkin {

/// P1 space on a mesh with homogeneous Dirichlet conditions: one unknown
/// per non-boundary vertex, numbered in vertex order.
class FemSpace {
 public:
  struct Element {
    std::array<mesh::VertexId, 3> v{};
    std::array<std::int32_t, 3> dof{};  // -1 on the boundary
    double area = 0.0;
    std::array<double, 9> grad_dot{};   // ∇φ_i·∇φ_j
    std::array<std::int64_t, 9> slot{};  // CSR position, -1 if either dof is fixed
  };

  explicit FemSpace(mesh::MeshPtr mesh);

  const mesh::Mesh& mesh() const { return *mesh_; }
  const mesh::MeshPtr& mesh_ptr() const { return mesh_; }
  std::size_t dim() const { return free_vertices_.size(); }
  std::int32_t dof(mesh::VertexId v) const { return dof_of_vertex_[static_cast<std::size_t>(v)]; }
  std::span<const mesh::VertexId> free_vertices() const { return free_vertices_; }
  std::span<const Element> elements() const { return elements_; }
  const CsrPattern& pattern() const { return pattern_; }

  /// CSR values of ∫ a ∇φ_i·∇φ_j.
  std::vector<double> assemble(const model::Coefficient& a, model::IntegrationRule rule) const;
  /// ∫ f φ_i; constant f integrates exactly.
  Eigen::VectorXd load(const model::Coefficient& f, model::IntegrationRule rule) const;

  /// Free-node coefficients to values at every vertex (zero on the boundary).
  Eigen::VectorXd to_nodal(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;

 private:
  mesh::MeshPtr mesh_;
  std::vector<std::int32_t> dof_of_vertex_;
  std::vector<mesh::VertexId> free_vertices_;
  std::vector<Element> elements_;
  CsrPattern pattern_;
};

using FemSpacePtr = std::shared_ptr<const FemSpace>;

/// Sparse Cholesky factorization of A₀, applied column by column.
class MeanSolver {
 public:
  explicit MeanSolver(const Eigen::SparseMatrix<double>& a0);
  std::size_t size() const { return n_; }
  void solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const;

 private:
  std::size_t n_ = 0;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

/// Stiffness operators A_0..A_M on one FemSpace, extended on demand.
class StiffnessFamily {
 public:
  StiffnessFamily(FemSpacePtr space, const model::ProblemSpec& spec, std::uint32_t max_mode = 0);

  /// Assembles the missing operators up to `max_mode`. Not safe to call
  /// concurrently with readers.
  void ensure(std::uint32_t max_mode);
  std::uint32_t max_mode() const { return static_cast<std::uint32_t>(values_.size()) - 1; }

  bool is_zero(std::uint32_t m) const { return zero_[m]; }
  std::span<const double> values(std::uint32_t m) const { return values_[m]; }
  void multiply(std::uint32_t m, const Eigen::Ref<const Eigen::MatrixXd>& x,
                Eigen::Ref<Eigen::MatrixXd> y, double alpha = 1.0, bool accumulate = false) const;
  Eigen::SparseMatrix<double> matrix(std::uint32_t m) const;
  Eigen::VectorXd diagonal(std::uint32_t m) const;

  const FemSpace& space() const { return *space_; }
  const FemSpacePtr& space_ptr() const { return space_; }
  const model::ProblemSpec& spec() const { return spec_; }
  const MeanSolver& mean_solver() const;

 private:
  FemSpacePtr space_;
  model::ProblemSpec spec_;
  std::vector<std::vector<double>> values_;
  std::vector<bool> zero_;
  mutable std::once_flag solver_once_;
  mutable std::unique_ptr<MeanSolver> solver_;
};

using StiffnessPtr = std::shared_ptr<StiffnessFamily>;

/// Entry (G_m)_{src,dst} between positions of two index sets.
struct CouplingEntry {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double value = 0.0;
};

struct CouplingBlock {
  std::uint32_t mode = 0;
  std::vector<CouplingEntry> entries;  // sorted by (src, dst)
};

/// Block of G_m with rows from `rows` and columns from `cols`; m = 0 gives
/// the identity on shared members.
std::vector<CouplingEntry> assemble_coupling(const param::IndexSet& rows, const param::IndexSet& cols,
                                             std::uint32_t m);

/// All nonzero blocks G_m, m >= 1, between two index sets.
class CouplingFamily {
 public:
  CouplingFamily() = default;
  CouplingFamily(const param::IndexSet& rows, const param::IndexSet& cols);

  std::span<const CouplingBlock> blocks() const { return blocks_; }
  /// Largest m with a nonzero block (0 if none).
  std::uint32_t max_mode() const { return blocks_.empty() ? 0 : blocks_.back().mode; }

 private:
  std::vector<CouplingBlock> blocks_;
};

/// Y[:, dst] += Σ_m (G_m)_{src,dst} A_m X[:, src].
void kron_accumulate(const StiffnessFamily& stiffness, const CouplingFamily& coupling,
                     const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y);

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
};

/// Discrete function Σ_ν u_ν P_ν with u_ν ∈ X on a fixed (space, index set).
/// Column j of the coefficient matrix belongs to indices()[j].
class GalerkinSolution {
 public:
  GalerkinSolution(FemSpacePtr space, param::IndexSet indices, Eigen::MatrixXd coeffs,
                   SolveStats stats = {});

  const FemSpace& space() const { return *space_; }
  const FemSpacePtr& space_ptr() const { return space_; }
  const mesh::MeshPtr& mesh_ptr() const { return space_->mesh_ptr(); }
  const param::IndexSet& indices() const { return indices_; }
  const Eigen::MatrixXd& coefficients() const { return coeffs_; }
  Eigen::MatrixXd& coefficients() { return coeffs_; }
  const SolveStats& stats() const { return stats_; }

  std::size_t dim_x() const { return space_->dim(); }
  std::size_t card() const { return indices_.size(); }
  std::size_t total_dofs() const { return dim_x() * card(); }

  /// Values at every mesh vertex of the coefficient belonging to indices()[j].
  Eigen::VectorXd nodal_values(std::size_t j) const;
  bool same_space(const GalerkinSolution& other) const;

 private:
  FemSpacePtr space_;
  param::IndexSet indices_;
  Eigen::MatrixXd coeffs_;
  SolveStats stats_;
};

/// Galerkin system B = Σ_m A_m ⊗ G_m on X ⊗ span{P_ν : ν ∈ P}.
class Discretization {
 public:
  Discretization(StiffnessPtr stiffness, param::IndexSet indices);
  Discretization(mesh::MeshPtr mesh, param::IndexSet indices, const model::ProblemSpec& spec,
                 std::uint32_t extra_modes = 0);

  const FemSpace& space() const { return stiffness_->space(); }
  const FemSpacePtr& space_ptr() const { return stiffness_->space_ptr(); }
  const StiffnessFamily& stiffness() const { return *stiffness_; }
  const StiffnessPtr& stiffness_ptr() const { return stiffness_; }
  const CouplingFamily& coupling() const { return coupling_; }
  const param::IndexSet& indices() const { return indices_; }
  std::size_t dim_x() const { return space().dim(); }
  std::size_t card() const { return indices_.size(); }

  /// F[z][ν]; nonzero only in the column of the zero index.
  Eigen::MatrixXd load() const;
  void apply(const Eigen::Ref<const Eigen::MatrixXd>& u, Eigen::Ref<Eigen::MatrixXd> y) const;
  void apply_mean(const Eigen::Ref<const Eigen::MatrixXd>& u, Eigen::Ref<Eigen::MatrixXd> y) const;
  /// r ← (A₀⁻¹ ⊗ I) r
  void precondition(Eigen::Ref<Eigen::MatrixXd> r) const;

  GalerkinSolution solve(const SolverOptions& options = {},
                         const Eigen::MatrixXd* initial = nullptr) const;

  double energy(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const;
  double mean_energy(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const;
  double b_energy(const GalerkinSolution& u, const GalerkinSolution& v) const;
  double b0_energy(const GalerkinSolution& u, const GalerkinSolution& v) const;

  void check_space(const GalerkinSolution& u) const;

 private:
  StiffnessPtr stiffness_;
  param::IndexSet indices_;
  CouplingFamily coupling_;
};

Eigen::SparseMatrix<double> assemble_stiffness(const mesh::MeshPtr& mesh, const model::Coefficient& a,
                                               model::IntegrationRule rule = model::IntegrationRule::Exact);
Eigen::MatrixXd assemble_load(const mesh::MeshPtr& mesh, const model::Coefficient& f,
                              const param::IndexSet& indices,
                              model::IntegrationRule rule = model::IntegrationRule::Exact);

/// B(u, u) on u's own space.
double energy_norm_sq(const GalerkinSolution& u, const model::ProblemSpec& spec);

/// Interpolation of free coefficients on `coarse` into `fine`, whose vertex
/// list must extend the coarse one by bisection midpoints.
Eigen::SparseMatrix<double> prolongation_matrix(const FemSpace& coarse, const FemSpace& fine);

/// Same function on a refined mesh and a larger index set.
GalerkinSolution prolong(const GalerkinSolution& u, const FemSpacePtr& finer, const param::IndexSet& larger);
GalerkinSolution prolong(const GalerkinSolution& u, const mesh::MeshPtr& finer, const param::IndexSet& larger);

}  // namespace sgfem::galerkin
