#include "sgfem/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sgfem/quadrature.hpp"

namespace sgfem::galerkin {

FemSpace::FemSpace(mesh::MeshPtr mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw InputDomainError("fem space: null mesh");
  const mesh::Mesh& m = *mesh_;
  dof_of_vertex_.assign(m.num_vertices(), -1);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!m.on_boundary(static_cast<mesh::VertexId>(v))) {
      dof_of_vertex_[v] = static_cast<std::int32_t>(free_vertices_.size());
      free_vertices_.push_back(static_cast<mesh::VertexId>(v));
    }
  }
  std::vector<std::vector<std::int32_t>> adjacency(free_vertices_.size());
  elements_.reserve(m.num_triangles());
  for (const mesh::Triangle& t : m.triangles()) {
    Element e;
    e.v = t.v;
    for (int i = 0; i < 3; ++i) e.dof[i] = dof(t.v[i]);
    const mesh::Point& p0 = m.vertex(t.v[0]);
    const mesh::Point& p1 = m.vertex(t.v[1]);
    const mesh::Point& p2 = m.vertex(t.v[2]);
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
    e.area = 0.5 * std::abs(det);
    const std::array<std::array<double, 2>, 3> g{{{(p1.y - p2.y) / det, (p2.x - p1.x) / det},
                                                   {(p2.y - p0.y) / det, (p0.x - p2.x) / det},
                                                   {(p0.y - p1.y) / det, (p1.x - p0.x) / det}}};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) e.grad_dot[3 * i + j] = g[i][0] * g[j][0] + g[i][1] * g[j][1];
    }
    for (int i = 0; i < 3; ++i) {
      if (e.dof[i] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (e.dof[j] >= 0 && j != i) adjacency[static_cast<std::size_t>(e.dof[i])].push_back(e.dof[j]);
      }
    }
    elements_.push_back(e);
  }
  pattern_ = CsrPattern::from_adjacency(free_vertices_.size(), std::move(adjacency));
  for (Element& e : elements_) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        e.slot[3 * i + j] = (e.dof[i] >= 0 && e.dof[j] >= 0) ? pattern_.slot(e.dof[i], e.dof[j]) : -1;
      }
    }
  }
}

std::vector<double> FemSpace::assemble(const model::Coefficient& a, model::IntegrationRule rule) const {
  std::vector<double> values(pattern_.nnz(), 0.0);
  if (a.is_zero()) return values;
  const mesh::Mesh& m = *mesh_;
  for (const Element& e : elements_) {
    const double integral = a.integrate(m.vertex(e.v[0]), m.vertex(e.v[1]), m.vertex(e.v[2]), rule);
    for (int k = 0; k < 9; ++k) {
      if (e.slot[k] >= 0) values[static_cast<std::size_t>(e.slot[k])] += integral * e.grad_dot[k];
    }
  }
  return values;
}

Eigen::VectorXd FemSpace::load(const model::Coefficient& f, model::IntegrationRule rule) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
  if (f.is_zero()) return out;
  const mesh::Mesh& m = *mesh_;
  for (const Element& e : elements_) {
    std::array<double, 3> local{};
    if (f.is_constant()) {
      local.fill(f.max_value() * e.area / 3.0);
    } else {
      (void)rule;
      const mesh::Point& a = m.vertex(e.v[0]);
      const mesh::Point& b = m.vertex(e.v[1]);
      const mesh::Point& c = m.vertex(e.v[2]);
      for (const quad::TrianglePoint& q : quad::degree5_rule()) {
        const double fv = f(quad::map_point(q, a, b, c));
        for (int i = 0; i < 3; ++i) local[i] += e.area * q.weight * fv * q.bary[i];
      }
    }
    for (int i = 0; i < 3; ++i) {
      if (e.dof[i] >= 0) out[e.dof[i]] += local[i];
    }
  }
  return out;
}

Eigen::VectorXd FemSpace::to_nodal(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->num_vertices()));
  for (std::size_t i = 0; i < free_vertices_.size(); ++i) {
    out[free_vertices_[i]] = coeffs[static_cast<Eigen::Index>(i)];
  }
  return out;
}

MeanSolver::MeanSolver(const Eigen::SparseMatrix<double>& a0) : n_(static_cast<std::size_t>(a0.rows())) {
  if (n_ == 0) return;
  llt_.compute(a0);
  if (llt_.info() != Eigen::Success) {
    throw SolverFailure("mean solver: A0 factorization failed", {});
  }
}

void MeanSolver::solve_in_place(Eigen::Ref<Eigen::MatrixXd> rhs) const {
  if (n_ == 0) return;
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    Eigen::VectorXd col = rhs.col(c);
    rhs.col(c) = llt_.solve(col);
  }
}

StiffnessFamily::StiffnessFamily(FemSpacePtr space, const model::ProblemSpec& spec, std::uint32_t max_mode)
    : space_(std::move(space)), spec_(spec) {
  values_.push_back(space_->assemble(spec_.mean(), spec_.rule()));
  zero_.push_back(false);
  ensure(max_mode);
}

void StiffnessFamily::ensure(std::uint32_t max_mode) {
  while (values_.size() <= max_mode) {
    const auto m = static_cast<std::uint32_t>(values_.size());
    if (spec_.mode_is_zero(m)) {
      values_.emplace_back(space_->pattern().nnz(), 0.0);
      zero_.push_back(true);
    } else {
      values_.push_back(space_->assemble(spec_.mode(m), spec_.rule()));
      zero_.push_back(false);
    }
  }
}

void StiffnessFamily::multiply(std::uint32_t m, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               Eigen::Ref<Eigen::MatrixXd> y, double alpha, bool accumulate) const {
  if (zero_[m]) {
    if (!accumulate) y.setZero();
    return;
  }
  csr_multiply(space_->pattern(), values_[m], x, y, alpha, accumulate);
}

Eigen::SparseMatrix<double> StiffnessFamily::matrix(std::uint32_t m) const {
  return to_eigen(space_->pattern(), values_[m]);
}

Eigen::VectorXd StiffnessFamily::diagonal(std::uint32_t m) const {
  return csr_diagonal(space_->pattern(), values_[m]);
}

const MeanSolver& StiffnessFamily::mean_solver() const {
  std::call_once(solver_once_, [this] { solver_ = std::make_unique<MeanSolver>(matrix(0)); });
  return *solver_;
}

std::vector<CouplingEntry> assemble_coupling(const param::IndexSet& rows, const param::IndexSet& cols,
                                             std::uint32_t m) {
  std::vector<CouplingEntry> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (m == 0) {
      if (auto j = cols.find(rows[i])) out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(*j), 1.0});
      continue;
    }
    for (int delta : {-1, +1}) {
      const auto mu = rows[i].shifted(m, delta);
      if (!mu) continue;
      if (auto j = cols.find(*mu)) {
        const std::uint32_t deg = std::max(rows[i].degree(m), mu->degree(m));
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(*j),
                       param::coupling_coefficient(deg)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const CouplingEntry& a, const CouplingEntry& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  return out;
}

CouplingFamily::CouplingFamily(const param::IndexSet& rows, const param::IndexSet& cols) {
  const std::uint32_t limit = std::max(param::active_dimension(rows), param::active_dimension(cols));
  for (std::uint32_t m = 1; m <= limit; ++m) {
    auto entries = assemble_coupling(rows, cols, m);
    if (!entries.empty()) blocks_.push_back({m, std::move(entries)});
  }
}

void kron_accumulate(const StiffnessFamily& stiffness, const CouplingFamily& coupling,
                     const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) {
  Eigen::VectorXd tmp(x.rows());
  for (const CouplingBlock& block : coupling.blocks()) {
    if (block.mode > stiffness.max_mode()) {
      throw InputDomainError("kron apply: stiffness family lacks mode " + std::to_string(block.mode));
    }
    if (stiffness.is_zero(block.mode)) continue;
    const auto& entries = block.entries;
    for (std::size_t k = 0; k < entries.size();) {
      const std::uint32_t src = entries[k].src;
      stiffness.multiply(block.mode, x.col(src), tmp);
      for (; k < entries.size() && entries[k].src == src; ++k) {
        y.col(entries[k].dst) += entries[k].value * tmp;
      }
    }
  }
}

GalerkinSolution::GalerkinSolution(FemSpacePtr space, param::IndexSet indices, Eigen::MatrixXd coeffs,
                                   SolveStats stats)
    : space_(std::move(space)), indices_(std::move(indices)), coeffs_(std::move(coeffs)), stats_(std::move(stats)) {
  if (coeffs_.rows() != static_cast<Eigen::Index>(space_->dim()) ||
      coeffs_.cols() != static_cast<Eigen::Index>(indices_.size())) {
    throw SpaceMismatch("solution: coefficient shape does not match dim(X) x #P");
  }
}

Eigen::VectorXd GalerkinSolution::nodal_values(std::size_t j) const {
  return space_->to_nodal(coeffs_.col(static_cast<Eigen::Index>(j)));
}

bool GalerkinSolution::same_space(const GalerkinSolution& other) const {
  const bool same_mesh = space_ == other.space_ || space_->mesh_ptr() == other.space_->mesh_ptr() ||
                         space_->mesh() == other.space_->mesh();
  return same_mesh && indices_ == other.indices_;
}

Discretization::Discretization(StiffnessPtr stiffness, param::IndexSet indices)
    : stiffness_(std::move(stiffness)), indices_(std::move(indices)), coupling_(indices_, indices_) {
  stiffness_->ensure(std::max(param::active_dimension(indices_), coupling_.max_mode()));
}

Discretization::Discretization(mesh::MeshPtr mesh, param::IndexSet indices, const model::ProblemSpec& spec,
                               std::uint32_t extra_modes)
    : Discretization(std::make_shared<StiffnessFamily>(std::make_shared<const FemSpace>(std::move(mesh)), spec,
                                                       param::active_dimension(indices) + extra_modes),
                     indices) {}

Eigen::MatrixXd Discretization::load() const {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_x()), static_cast<Eigen::Index>(card()));
  if (auto zero = indices_.find(param::MultiIndex{})) {
    f.col(static_cast<Eigen::Index>(*zero)) = space().load(stiffness_->spec().rhs(), stiffness_->spec().rule());
  }
  return f;
}

void Discretization::apply(const Eigen::Ref<const Eigen::MatrixXd>& u, Eigen::Ref<Eigen::MatrixXd> y) const {
  stiffness_->multiply(0, u, y);
  kron_accumulate(*stiffness_, coupling_, u, y);
}

void Discretization::apply_mean(const Eigen::Ref<const Eigen::MatrixXd>& u, Eigen::Ref<Eigen::MatrixXd> y) const {
  stiffness_->multiply(0, u, y);
}

void Discretization::precondition(Eigen::Ref<Eigen::MatrixXd> r) const {
  stiffness_->mean_solver().solve_in_place(r);
}

GalerkinSolution Discretization::solve(const SolverOptions& options, const Eigen::MatrixXd* initial) const {
  const auto n = static_cast<Eigen::Index>(dim_x());
  const auto p = static_cast<Eigen::Index>(card());
  Eigen::MatrixXd f = load();
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(f.data(), n * p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n * p);
  if (initial) {
    if (initial->rows() != n || initial->cols() != p) throw SpaceMismatch("solve: initial guess has wrong shape");
    x = Eigen::Map<const Eigen::VectorXd>(initial->data(), n * p);
  }
  SolveStats stats;
  if (n > 0) {
    auto apply_fn = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
      apply(Eigen::Map<const Eigen::MatrixXd>(in.data(), n, p), Eigen::Map<Eigen::MatrixXd>(out.data(), n, p));
    };
    auto prec_fn = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
      out = in;
      precondition(Eigen::Map<Eigen::MatrixXd>(out.data(), n, p));
    };
    stats = pcg(apply_fn, prec_fn, b, x, options.tol, options.max_iter);
  }
  return GalerkinSolution(space_ptr(), indices_, Eigen::Map<const Eigen::MatrixXd>(x.data(), n, p), std::move(stats));
}

double Discretization::energy(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd y(v.rows(), v.cols());
  apply(v, y);
  return u.cwiseProduct(y).sum();
}

double Discretization::mean_energy(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd y(v.rows(), v.cols());
  apply_mean(v, y);
  return u.cwiseProduct(y).sum();
}

void Discretization::check_space(const GalerkinSolution& u) const {
  const bool same_mesh = u.space_ptr() == space_ptr() || u.mesh_ptr() == space().mesh_ptr() ||
                         u.space().mesh() == space().mesh();
  if (!same_mesh || !(u.indices() == indices_)) {
    throw SpaceMismatch("energy: operands live on a different (mesh, index set)");
  }
}

double Discretization::b_energy(const GalerkinSolution& u, const GalerkinSolution& v) const {
  check_space(u);
  check_space(v);
  return energy(u.coefficients(), v.coefficients());
}

double Discretization::b0_energy(const GalerkinSolution& u, const GalerkinSolution& v) const {
  check_space(u);
  check_space(v);
  return mean_energy(u.coefficients(), v.coefficients());
}

Eigen::SparseMatrix<double> assemble_stiffness(const mesh::MeshPtr& mesh, const model::Coefficient& a,
                                               model::IntegrationRule rule) {
  const FemSpace space(mesh);
  return to_eigen(space.pattern(), space.assemble(a, rule));
}

Eigen::MatrixXd assemble_load(const mesh::MeshPtr& mesh, const model::Coefficient& f,
                              const param::IndexSet& indices, model::IntegrationRule rule) {
  const FemSpace space(mesh);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.dim()),
                                              static_cast<Eigen::Index>(indices.size()));
  if (auto zero = indices.find(param::MultiIndex{})) out.col(static_cast<Eigen::Index>(*zero)) = space.load(f, rule);
  return out;
}

double energy_norm_sq(const GalerkinSolution& u, const model::ProblemSpec& spec) {
  const Discretization disc(std::make_shared<StiffnessFamily>(u.space_ptr(), spec), u.indices());
  return disc.energy(u.coefficients(), u.coefficients());
}

Eigen::SparseMatrix<double> prolongation_matrix(const FemSpace& coarse, const FemSpace& fine) {
  const mesh::Mesh& cm = coarse.mesh();
  const mesh::Mesh& fm = fine.mesh();
  const std::size_t nc = cm.num_vertices();
  if (fm.num_vertices() < nc) throw InputDomainError("prolong: target mesh is not a refinement");
  for (std::size_t v = 0; v < nc; ++v) {
    const auto id = static_cast<mesh::VertexId>(v);
    if (!(cm.vertex(id) == fm.vertex(id)) || cm.on_boundary(id) != fm.on_boundary(id)) {
      throw InputDomainError("prolong: target mesh does not extend the source vertices");
    }
  }
  using Row = std::vector<std::pair<std::int32_t, double>>;
  std::vector<Row> rows(fm.num_vertices());
  for (std::size_t v = 0; v < nc; ++v) {
    const std::int32_t d = coarse.dof(static_cast<mesh::VertexId>(v));
    if (d >= 0) rows[v].emplace_back(d, 1.0);
  }
  for (std::size_t v = nc; v < fm.num_vertices(); ++v) {
    const auto id = static_cast<mesh::VertexId>(v);
    const mesh::VertexParents& par = fm.parents(id);
    if (!par.has_parents() || par.a >= id || par.b >= id) {
      throw InputDomainError("prolong: new vertex without bisection parents");
    }
    const mesh::Point& pa = fm.vertex(par.a);
    const mesh::Point& pb = fm.vertex(par.b);
    const mesh::Point& pv = fm.vertex(id);
    if (std::abs(0.5 * (pa.x + pb.x) - pv.x) > 1e-12 || std::abs(0.5 * (pa.y + pb.y) - pv.y) > 1e-12) {
      throw InputDomainError("prolong: new vertex is not an edge midpoint");
    }
    std::map<std::int32_t, double> acc;
    for (const auto& [d, w] : rows[static_cast<std::size_t>(par.a)]) acc[d] += 0.5 * w;
    for (const auto& [d, w] : rows[static_cast<std::size_t>(par.b)]) acc[d] += 0.5 * w;
    rows[v].assign(acc.begin(), acc.end());
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < fine.dim(); ++i) {
    for (const auto& [d, w] : rows[static_cast<std::size_t>(fine.free_vertices()[i])]) {
      triplets.emplace_back(static_cast<int>(i), d, w);
    }
  }
  Eigen::SparseMatrix<double> p(static_cast<Eigen::Index>(fine.dim()), static_cast<Eigen::Index>(coarse.dim()));
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

GalerkinSolution prolong(const GalerkinSolution& u, const FemSpacePtr& finer, const param::IndexSet& larger) {
  if (!larger.includes(u.indices())) throw InputDomainError("prolong: target index set does not contain the source");
  const Eigen::SparseMatrix<double> p = prolongation_matrix(u.space(), *finer);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(finer->dim()),
                                              static_cast<Eigen::Index>(larger.size()));
  for (std::size_t j = 0; j < u.indices().size(); ++j) {
    const auto target = static_cast<Eigen::Index>(*larger.find(u.indices()[j]));
    out.col(target) = p * u.coefficients().col(static_cast<Eigen::Index>(j));
  }
  return GalerkinSolution(finer, larger, std::move(out));
}

GalerkinSolution prolong(const GalerkinSolution& u, const mesh::MeshPtr& finer, const param::IndexSet& larger) {
  if (finer == u.mesh_ptr()) return prolong(u, u.space_ptr(), larger);
  return prolong(u, std::make_shared<const FemSpace>(finer), larger);
}

}  // namespace sgfem::galerkin
