#include "sgfem/estimators.hpp"

#include <cmath>

namespace sgfem::estimators {

namespace {

double root_sum_squares(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

bool same_mesh(const mesh::MeshPtr& a, const mesh::MeshPtr& b) { return a == b || *a == *b; }

}  // namespace

double ErrorIndicators::spatial_sum(std::span<const std::size_t> ids) const {
  double s = 0.0;
  for (std::size_t i : ids) s += spatial.at(i) * spatial.at(i);
  return std::sqrt(s);
}

double ErrorIndicators::parametric_sum(std::span<const std::size_t> ids) const {
  double s = 0.0;
  for (std::size_t i : ids) s += parametric.at(i) * parametric.at(i);
  return std::sqrt(s);
}

Totals overall(std::span<const double> spatial, std::span<const double> parametric) {
  Totals t;
  t.spatial = root_sum_squares(spatial);
  t.parametric = root_sum_squares(parametric);
  t.total = std::sqrt(t.spatial * t.spatial + t.parametric * t.parametric);
  return t;
}

Totals overall(const ErrorIndicators& indicators) { return overall(indicators.spatial, indicators.parametric); }

std::vector<double> spatial_indicators(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                                       const galerkin::StiffnessPtr& fine) {
  if (!same_mesh(u.mesh_ptr(), overlay.coarse)) {
    throw SpaceMismatch("spatial indicators: solution does not live on the overlay's coarse mesh");
  }
  if (!same_mesh(fine->space().mesh_ptr(), overlay.fine)) {
    throw SpaceMismatch("spatial indicators: stiffness does not live on the overlay's fine mesh");
  }
  const galerkin::Discretization disc(fine, u.indices());
  const galerkin::GalerkinSolution lifted = galerkin::prolong(u, disc.space_ptr(), u.indices());
  Eigen::MatrixXd residual = disc.load();
  Eigen::MatrixXd bu(residual.rows(), residual.cols());
  disc.apply(lifted.coefficients(), bu);
  residual -= bu;
  const Eigen::VectorXd diag = fine->diagonal(0);
  std::vector<double> out(overlay.num_plus());
  for (std::size_t i = 0; i < overlay.num_plus(); ++i) {
    const std::int32_t d = disc.space().dof(overlay.plus_vertices[i]);
    if (d < 0) throw InputDomainError("spatial indicators: N+ vertex on the boundary");
    out[i] = std::sqrt(residual.row(d).squaredNorm() / diag[d]);
  }
  return out;
}

std::vector<double> spatial_indicators(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                                       const model::ProblemSpec& spec) {
  auto fine = std::make_shared<galerkin::StiffnessFamily>(std::make_shared<const galerkin::FemSpace>(overlay.fine),
                                                          spec, param::active_dimension(u.indices()));
  return spatial_indicators(u, overlay, fine);
}

std::vector<double> parametric_indicators(const galerkin::GalerkinSolution& u, const param::IndexSet& detail,
                                          const galerkin::StiffnessPtr& coarse) {
  if (!same_mesh(u.mesh_ptr(), coarse->space().mesh_ptr())) {
    throw SpaceMismatch("parametric indicators: stiffness does not live on the solution's mesh");
  }
  const galerkin::CouplingFamily coupling(u.indices(), detail);
  coarse->ensure(coupling.max_mode());
  const auto n = static_cast<Eigen::Index>(u.dim_x());
  const auto q = static_cast<Eigen::Index>(detail.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, q);
  galerkin::kron_accumulate(*coarse, coupling, u.coefficients(), r);
  r = -r;
  if (auto zero = detail.find(param::MultiIndex{})) {
    r.col(static_cast<Eigen::Index>(*zero)) += coarse->space().load(coarse->spec().rhs(), coarse->spec().rule());
  }
  Eigen::MatrixXd e = r;
  coarse->mean_solver().solve_in_place(e);
  std::vector<double> out(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) out[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, e.col(j).dot(r.col(j))));
  return out;
}

std::vector<double> parametric_indicators(const galerkin::GalerkinSolution& u, const param::IndexSet& detail,
                                          const model::ProblemSpec& spec) {
  auto coarse = std::make_shared<galerkin::StiffnessFamily>(u.space_ptr(), spec, 0);
  return parametric_indicators(u, detail, coarse);
}

ErrorIndicators estimate(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                         const galerkin::StiffnessPtr& coarse, const galerkin::StiffnessPtr& fine) {
  ErrorIndicators ind;
  ind.spatial = spatial_indicators(u, overlay, fine);
  ind.detail = param::detail_index_set(u.indices());
  ind.parametric = parametric_indicators(u, ind.detail, coarse);
  const Totals t = overall(ind);
  ind.spatial_total = t.spatial;
  ind.parametric_total = t.parametric;
  ind.total = t.total;
  return ind;
}

ErrorIndicators estimate(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                         const model::ProblemSpec& spec) {
  auto coarse = std::make_shared<galerkin::StiffnessFamily>(u.space_ptr(), spec, 0);
  auto fine = std::make_shared<galerkin::StiffnessFamily>(std::make_shared<const galerkin::FemSpace>(overlay.fine),
                                                          spec, 0);
  return estimate(u, overlay, coarse, fine);
}

}  // namespace sgfem::estimators
