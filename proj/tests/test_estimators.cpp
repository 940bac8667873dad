#include <doctest.h>

#include <map>
#include <numeric>
#include <random>

#include "oracles/oracles.hpp"
#include "sgfem/enhanced.hpp"
#include "sgfem/estimators.hpp"

using namespace sgfem;
using namespace sgfem::estimators;
using galerkin::Discretization;
using galerkin::GalerkinSolution;
using mesh::MeshPtr;
using mesh::Point;
using param::IndexSet;
using param::MultiIndex;

namespace {

MeshPtr lshape() { return std::make_shared<const mesh::Mesh>(mesh::initial_lshape()); }

MeshPtr adaptive_mesh(std::mt19937& rng, int steps) {
  MeshPtr m = mesh::uniform_refine(lshape()).fine;
  for (int s = 0; s < steps; ++s) {
    const auto ov = mesh::uniform_refine(m);
    std::vector<std::size_t> marked;
    for (std::size_t i = 0; i < ov.num_plus(); ++i) {
      if (rng() % 3 == 0) marked.push_back(i);
    }
    if (marked.empty()) marked.push_back(0);
    m = mesh::refine(ov, marked).mesh;
  }
  return m;
}

const IndexSet kP3 = IndexSet({MultiIndex(), MultiIndex::unit(1), MultiIndex::unit(2)});

std::vector<double> oracle_spatial(const MeshPtr& coarse, const mesh::TwoLevelOverlay& ov, const GalerkinSolution& u,
                                   const model::ProblemSpec& spec) {
  const std::vector<MultiIndex> P(u.indices().begin(), u.indices().end());
  const Eigen::MatrixXd R = oracle::fine_residual(*coarse, *ov.fine, P, u.coefficients(), spec);
  const auto a0 = spec.mode(0);
  const Eigen::MatrixXd A0 = oracle::dense_stiffness(*ov.fine, [&](const Point& p) { return a0(p); });
  const auto fdof = oracle::free_numbering(*ov.fine);
  std::vector<double> eta;
  for (auto z : ov.plus_vertices) {
    const int k = fdof[static_cast<std::size_t>(z)];
    eta.push_back(std::sqrt(R.row(k).squaredNorm() / A0(k, k)));
  }
  return eta;
}

std::vector<double> oracle_parametric(const MeshPtr& m, const GalerkinSolution& u, const IndexSet& Q,
                                      const model::ProblemSpec& spec) {
  std::vector<MultiIndex> all(u.indices().begin(), u.indices().end());
  all.insert(all.end(), Q.begin(), Q.end());
  const auto d = oracle::dense_galerkin(*m, all, spec);
  const Eigen::MatrixXd& A0 = d.stiffness[0];
  std::vector<double> eta;
  for (std::size_t q = 0; q < Q.size(); ++q) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(d.nx);
    for (std::size_t j = 0; j < u.card(); ++j) {
      for (std::uint32_t k = 0; k < d.stiffness.size(); ++k) {
        const double g = oracle::coupling(Q[q], u.indices()[j], k);
        if (g != 0.0) r -= g * d.stiffness[k] * u.coefficients().col(static_cast<Eigen::Index>(j));
      }
    }
    const Eigen::VectorXd e = A0.ldlt().solve(r);
    eta.push_back(std::sqrt(e.dot(r)));
  }
  return eta;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, v);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol * scale);
}

}  // namespace

TEST_CASE("overall estimate") {
  auto t = overall(std::vector<double>{3, 4}, std::vector<double>{});
  CHECK(t.total == 5.0);
  CHECK(t.spatial == 5.0);
  CHECK(t.parametric == 0.0);
  t = overall(std::vector<double>{}, std::vector<double>{});
  CHECK(t.total == 0.0);
  CHECK(t.spatial == 0.0);
  CHECK(t.parametric == 0.0);
  t = overall(std::vector<double>{1, 2, 2}, std::vector<double>{2 * std::sqrt(2.0), 2 * std::sqrt(2.0)});
  CHECK(t.total == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(t.spatial == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(t.parametric == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("spatial indicators on the initial mesh match the dense residual") {
  const auto spec = model::ProblemSpec::benchmark();
  const MeshPtr m = lshape();
  const auto ov = mesh::uniform_refine(m);
  const auto u = Discretization(m, IndexSet::initial(), spec).solve();
  CHECK(u.dim_x() == 0);
  const auto eta = spatial_indicators(u, ov, spec);
  REQUIRE(eta.size() == 5);
  check_close(eta, oracle_spatial(m, ov, u, spec), 1e-12);
  // u = 0 here: η(z) = F(φ̂_z) / ‖∇φ̂_z‖
  const galerkin::FemSpace fine(ov.fine);
  const Eigen::VectorXd F = fine.load(spec.rhs(), spec.rule());
  const Eigen::VectorXd diag = galerkin::csr_diagonal(fine.pattern(), fine.assemble(spec.mode(0), spec.rule()));
  for (std::size_t i = 0; i < 5; ++i) {
    const auto k = fine.dof(ov.plus_vertices[i]);
    CHECK(eta[i] == doctest::Approx(F[k] / std::sqrt(diag[k])).epsilon(1e-14));
  }
}

TEST_CASE("spatial and parametric indicators match dense oracles on adaptive meshes") {
  const auto spec = model::ProblemSpec::benchmark();
  std::mt19937 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const MeshPtr m = adaptive_mesh(rng, 1 + trial);
    const auto ov = mesh::uniform_refine(m);
    const IndexSet& P = trial == 0 ? IndexSet::initial() : kP3;
    const auto u = Discretization(m, P, spec).solve();
    const IndexSet Q = param::detail_index_set(P);
    const auto ind = estimate(u, ov, spec);
    check_close(ind.spatial, oracle_spatial(m, ov, u, spec), 1e-11);
    check_close(ind.parametric, oracle_parametric(m, u, Q, spec), 1e-11);
    CHECK(ind.detail == Q);
    CHECK(ind.total * ind.total ==
          doctest::Approx(ind.spatial_total * ind.spatial_total + ind.parametric_total * ind.parametric_total)
              .epsilon(1e-12));
    for (double v : ind.spatial) CHECK(v >= 0.0);
    for (double v : ind.parametric) CHECK(v >= 0.0);

    std::vector<std::size_t> all(ind.spatial.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    CHECK(ind.spatial_sum(all) == doctest::Approx(ind.spatial_total).epsilon(1e-14));
    const std::vector<std::size_t> first{0};
    CHECK(ind.parametric_sum(first) == doctest::Approx(ind.parametric[0]).epsilon(1e-15));
  }
}

TEST_CASE("deterministic problem has no parametric error") {
  const auto det = model::ProblemSpec::deterministic();
  std::mt19937 rng(6);
  const MeshPtr m = adaptive_mesh(rng, 2);
  const auto u = Discretization(m, IndexSet::initial(), det).solve();
  const auto ind = estimate(u, mesh::uniform_refine(m), det);
  for (double v : ind.parametric) CHECK(v == 0.0);
  CHECK(ind.spatial_total > 0.0);
}

TEST_CASE("enhanced Galerkin solution has vanishing residual at N+") {
  const auto spec = model::ProblemSpec::benchmark();
  std::mt19937 rng(7);
  const MeshPtr m = adaptive_mesh(rng, 2);
  const auto ov = mesh::uniform_refine(m);
  const IndexSet Q = param::detail_index_set(kP3);
  const auto uh = galerkin::solve_enhanced(ov, kP3, Q, spec);
  const Discretization fine(ov.fine, uh.combined.indices(), spec);
  Eigen::MatrixXd r = fine.load();
  Eigen::MatrixXd bu(r.rows(), r.cols());
  fine.apply(uh.combined.coefficients(), bu);
  r -= bu;
  const double scale = fine.load().norm();
  for (std::size_t j = 0; j < kP3.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(*uh.combined.indices().find(kP3[j]));
    for (auto z : ov.plus_vertices) CHECK(std::abs(r(fine.space().dof(z), col)) < 1e-9 * scale);
  }
}

TEST_CASE("estimator lower bound against the enhanced solution") {
  const auto spec = model::ProblemSpec::benchmark();
  const auto bounds = model::contrast_bounds(spec);
  std::mt19937 rng(8);
  for (int trial = 0; trial < 4; ++trial) {
    const MeshPtr m = adaptive_mesh(rng, trial);
    const auto ov = mesh::uniform_refine(m);
    const IndexSet& P = trial % 2 ? kP3 : IndexSet::initial();
    const auto u = Discretization(m, P, spec).solve();
    const auto ind = estimate(u, ov, spec);
    const auto uh = galerkin::solve_enhanced(ov, P, ind.detail, spec);
    const auto up = galerkin::prolong(u, ov.fine, uh.combined.indices());
    const Discretization fine(ov.fine, uh.combined.indices(), spec);
    const Eigen::MatrixXd diff = uh.combined.coefficients() - up.coefficients();
    const double err2 = fine.energy(diff, diff);
    CHECK(bounds.lambda / 3.0 * ind.total * ind.total <= (1 + 1e-6) * err2);
  }
}

TEST_CASE("indicators do not depend on the vertex numbering") {
  const auto spec = model::ProblemSpec::benchmark();
  std::mt19937 rng(9);
  const MeshPtr m = adaptive_mesh(rng, 2);
  std::vector<mesh::VertexId> perm(m->num_vertices());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point> pts(m->num_vertices());
  std::vector<bool> bnd(m->num_vertices());
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    pts[static_cast<std::size_t>(perm[v])] = m->vertices()[v];
    bnd[static_cast<std::size_t>(perm[v])] = m->on_boundary(static_cast<mesh::VertexId>(v));
  }
  std::vector<mesh::Triangle> tris;
  for (const auto& t : m->triangles()) tris.push_back({{perm[t.v[0]], perm[t.v[1]], perm[t.v[2]]}, t.generation});
  const MeshPtr pm = std::make_shared<const mesh::Mesh>(pts, bnd, tris);

  galerkin::SolverOptions opt;
  opt.tol = 1e-13;
  const auto a = estimate(Discretization(m, kP3, spec).solve(opt), mesh::uniform_refine(m), spec);
  const auto pov = mesh::uniform_refine(pm);
  const auto b = estimate(Discretization(pm, kP3, spec).solve(opt), pov, spec);

  const auto ov = mesh::uniform_refine(m);
  std::map<std::pair<double, double>, double> by_point;
  for (std::size_t i = 0; i < ov.num_plus(); ++i) {
    const Point z = ov.fine->vertex(ov.plus_vertices[i]);
    by_point[{z.x, z.y}] = a.spatial[i];
  }
  REQUIRE(b.spatial.size() == a.spatial.size());
  for (std::size_t i = 0; i < pov.num_plus(); ++i) {
    const Point z = pov.fine->vertex(pov.plus_vertices[i]);
    CHECK(b.spatial[i] == doctest::Approx(by_point.at({z.x, z.y})).epsilon(1e-9));
  }
  REQUIRE(a.parametric.size() == b.parametric.size());
  for (std::size_t i = 0; i < a.parametric.size(); ++i) {
    CHECK(b.parametric[i] == doctest::Approx(a.parametric[i]).epsilon(1e-9));
  }
}

TEST_CASE("mismatched inputs are rejected") {
  const auto spec = model::ProblemSpec::benchmark();
  std::mt19937 rng(10);
  const MeshPtr m = adaptive_mesh(rng, 1);
  const auto u = Discretization(m, IndexSet::initial(), spec).solve();
  const auto other = mesh::uniform_refine(adaptive_mesh(rng, 2));
  CHECK_THROWS_AS(spatial_indicators(u, other, spec), SpaceMismatch);
}
