#include "sgfem/enhanced.hpp"

namespace sgfem::galerkin {

namespace {

param::IndexSet joined(const param::IndexSet& a, const param::IndexSet& b) {
  std::vector<param::MultiIndex> all(a.begin(), a.end());
  for (const auto& nu : b) {
    if (a.contains(nu)) throw InputDomainError("enhanced: active and detail sets overlap");
    all.push_back(nu);
  }
  return param::IndexSet(std::move(all));
}

}  // namespace

EnhancedSystem::EnhancedSystem(const mesh::TwoLevelOverlay& overlay, const param::IndexSet& active,
                               const param::IndexSet& detail, const model::ProblemSpec& spec)
    : active_(active),
      detail_(detail),
      fine_(overlay.fine, joined(active, detail), spec),
      coarse_(std::make_shared<StiffnessFamily>(std::make_shared<const FemSpace>(overlay.coarse), spec, 0)),
      prolongation_(prolongation_matrix(coarse_->space(), fine_.space())) {}

std::size_t EnhancedSystem::fine_rows() const { return fine_.dim_x(); }
std::size_t EnhancedSystem::coarse_rows() const { return coarse_->space().dim(); }
std::size_t EnhancedSystem::size() const {
  return fine_rows() * active_.size() + coarse_rows() * detail_.size();
}

void EnhancedSystem::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const auto nf = static_cast<Eigen::Index>(fine_rows());
  const auto nc = static_cast<Eigen::Index>(coarse_rows());
  const auto p = static_cast<Eigen::Index>(active_.size());
  const auto q = static_cast<Eigen::Index>(detail_.size());
  Eigen::MatrixXd z(nf, p + q);
  z.leftCols(p) = Eigen::Map<const Eigen::MatrixXd>(x.data(), nf, p);
  const Eigen::Map<const Eigen::MatrixXd> w(x.data() + nf * p, nc, q);
  z.rightCols(q) = prolongation_ * w;
  Eigen::MatrixXd out(nf, p + q);
  fine_.apply(z, out);
  y.resize(x.size());
  Eigen::Map<Eigen::MatrixXd>(y.data(), nf, p) = out.leftCols(p);
  Eigen::Map<Eigen::MatrixXd>(y.data() + nf * p, nc, q) = prolongation_.transpose() * out.rightCols(q);
}

void EnhancedSystem::precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  const auto nf = static_cast<Eigen::Index>(fine_rows());
  const auto nc = static_cast<Eigen::Index>(coarse_rows());
  const auto p = static_cast<Eigen::Index>(active_.size());
  const auto q = static_cast<Eigen::Index>(detail_.size());
  z = r;
  fine_.stiffness().mean_solver().solve_in_place(Eigen::Map<Eigen::MatrixXd>(z.data(), nf, p));
  coarse_->mean_solver().solve_in_place(Eigen::Map<Eigen::MatrixXd>(z.data() + nf * p, nc, q));
}

Eigen::VectorXd EnhancedSystem::load() const {
  const auto nf = static_cast<Eigen::Index>(fine_rows());
  const auto nc = static_cast<Eigen::Index>(coarse_rows());
  const auto p = static_cast<Eigen::Index>(active_.size());
  const auto q = static_cast<Eigen::Index>(detail_.size());
  const Eigen::MatrixXd f = fine_.load();
  Eigen::VectorXd b(static_cast<Eigen::Index>(size()));
  Eigen::Map<Eigen::MatrixXd>(b.data(), nf, p) = f.leftCols(p);
  Eigen::Map<Eigen::MatrixXd>(b.data() + nf * p, nc, q) = prolongation_.transpose() * f.rightCols(q);
  return b;
}

EnhancedSolution EnhancedSystem::solve(const SolverOptions& options) const {
  const auto nf = static_cast<Eigen::Index>(fine_rows());
  const auto nc = static_cast<Eigen::Index>(coarse_rows());
  const auto p = static_cast<Eigen::Index>(active_.size());
  const auto q = static_cast<Eigen::Index>(detail_.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  SolveStats stats;
  if (x.size() > 0) {
    stats = pcg([this](const Eigen::VectorXd& in, Eigen::VectorXd& out) { apply(in, out); },
                [this](const Eigen::VectorXd& in, Eigen::VectorXd& out) { precondition(in, out); }, load(), x,
                options.tol, options.max_iter);
  }
  Eigen::MatrixXd fine_block = Eigen::Map<const Eigen::MatrixXd>(x.data(), nf, p);
  Eigen::MatrixXd coarse_block = Eigen::Map<const Eigen::MatrixXd>(x.data() + nf * p, nc, q);
  Eigen::MatrixXd combined(nf, p + q);
  combined.leftCols(p) = fine_block;
  combined.rightCols(q) = prolongation_ * coarse_block;
  GalerkinSolution sol(fine_.space_ptr(), fine_.indices(), std::move(combined), stats);
  return EnhancedSolution{std::move(fine_block), std::move(coarse_block), std::move(sol), std::move(stats), size()};
}

EnhancedSolution solve_enhanced(const mesh::TwoLevelOverlay& overlay, const param::IndexSet& active,
                                const param::IndexSet& detail, const model::ProblemSpec& spec,
                                const SolverOptions& options) {
  return EnhancedSystem(overlay, active, detail, spec).solve(options);
}

}  // namespace sgfem::galerkin
