#include "sgfem/driver.hpp"

#include <chrono>
#include <cmath>

namespace sgfem::driver {

namespace {

// Operators living on one mesh; reused while only the index set grows.
struct MeshLevel {
  mesh::MeshPtr mesh;
  mesh::TwoLevelOverlay overlay;
  galerkin::StiffnessPtr coarse;
  galerkin::StiffnessPtr fine;

  MeshLevel(mesh::MeshPtr m, const model::ProblemSpec& spec)
      : mesh(std::move(m)),
        overlay(mesh::uniform_refine(mesh)),
        coarse(std::make_shared<galerkin::StiffnessFamily>(std::make_shared<const galerkin::FemSpace>(mesh), spec)),
        fine(std::make_shared<galerkin::StiffnessFamily>(std::make_shared<const galerkin::FemSpace>(overlay.fine),
                                                         spec)) {}
};

std::size_t free_vertex_count(const mesh::Mesh& m) {
  std::size_t n = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) n += m.on_boundary(static_cast<mesh::VertexId>(v)) ? 0 : 1;
  return n;
}

}  // namespace

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::ToleranceReached:
      return "tolerance";
    case StopReason::IterationCap:
      return "iteration-cap";
    case StopReason::DofCap:
      return "dof-cap";
    case StopReason::ZeroEstimate:
      return "zero-estimate";
  }
  return "unknown";
}

std::size_t AdaptiveTrace::cost() const { return cumulative_cost(*this); }

AdaptiveTrace run_adaptive(const model::ProblemSpec& spec, const RunOptions& options) {
  options.params.validate(options.criterion);
  AdaptiveTrace trace;
  trace.options = options;
  trace.sigma = spec.sigma();
  trace.amplitude = spec.amplitude();
  trace.tau = spec.tau();
  const model::ContrastBounds bounds = model::contrast_bounds(spec);
  trace.lambda = bounds.lambda;
  trace.Lambda = bounds.Lambda;

  mesh::MeshPtr initial = options.initial_mesh
                              ? options.initial_mesh
                              : std::make_shared<const mesh::Mesh>(mesh::initial_lshape());
  auto level = std::make_unique<MeshLevel>(initial, spec);
  param::IndexSet indices = param::IndexSet::initial();
  std::optional<galerkin::GalerkinSolution> previous;
  std::size_t cost = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t iter = 0;; ++iter) {
    const galerkin::Discretization disc(level->coarse, indices);
    std::optional<galerkin::GalerkinSolution> lifted;
    if (previous) lifted = galerkin::prolong(*previous, disc.space_ptr(), indices);
    std::optional<galerkin::GalerkinSolution> solved;
    try {
      solved.emplace(disc.solve(options.solver, lifted ? &lifted->coefficients() : nullptr));
    } catch (const SolverFailure& e) {
      trace.final_mesh = level->mesh;
      trace.final_indices = indices;
      throw RunFailure(e, std::move(trace));
    }
    galerkin::GalerkinSolution u = std::move(*solved);

    IterationRecord rec;
    rec.iter = iter;
    rec.dim_x = u.dim_x();
    rec.card_p = u.card();
    rec.n_total = u.total_dofs();
    rec.max_active_dim = param::active_dimension(indices);
    rec.solver_iters = u.stats().iterations;
    rec.solver_residual = u.stats().residual;
    rec.energy_sq = disc.energy(u.coefficients(), u.coefficients());
    cost += rec.n_total;
    rec.cum_cost = cost;

    if (lifted) {
      IterationRecord& prev = trace.records.back();
      const Eigen::MatrixXd diff = u.coefficients() - lifted->coefficients();
      const double diff_sq = disc.energy(diff, diff);
      rec.diff_energy_sq = diff_sq;
      rec.pythagoras_defect =
          std::abs(rec.energy_sq - prev.energy_sq - diff_sq) / (rec.energy_sq > 0.0 ? rec.energy_sq : 1.0);
      const double lower = trace.lambda / AdaptiveTrace::K * prev.step_estimate_sq.value_or(0.0);
      rec.reduction_ratio = diff_sq > 0.0 ? lower / diff_sq : (lower > 0.0 ? INFINITY : 0.0);
      if (options.enforce_bounds && lower > (1.0 + 1e-6) * diff_sq) {
        throw InvariantViolation("error-reduction bound violated at step " + std::to_string(iter - 1) +
                                 ": (lambda/K) eta^2 = " + std::to_string(lower) +
                                 " > |u_{l+1} - u_l|^2 = " + std::to_string(diff_sq));
      }
    }

    const estimators::ErrorIndicators ind = estimators::estimate(u, level->overlay, level->coarse, level->fine);
    rec.eta = ind.total;
    rec.eta_spatial = ind.spatial_total;
    rec.eta_param = ind.parametric_total;

    auto finish = [&](StopReason reason) {
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      trace.records.push_back(rec);
      if (options.on_iteration) options.on_iteration(trace.records.back());
      trace.stop = reason;
      trace.final_mesh = level->mesh;
      trace.final_indices = indices;
      trace.final_detail = ind.detail;
      if (options.keep_solutions) trace.solutions.push_back(u);
      trace.final_solution = std::move(u);
    };

    if (rec.eta <= options.tol) {
      finish(StopReason::ToleranceReached);
      return trace;
    }
    if (iter >= options.max_iter) {
      finish(StopReason::IterationCap);
      return trace;
    }

    marking::MarkingDecision decision = marking::decide(options.criterion, ind, options.params, level->overlay);
    if (decision.kind == marking::Refinement::Terminate) {
      finish(StopReason::ZeroEstimate);
      return trace;
    }

    std::optional<mesh::RefineResult> refined;
    param::IndexSet next_indices = indices;
    std::size_t next_dofs = 0;
    if (decision.kind == marking::Refinement::Spatial) {
      refined = decision.trial ? std::move(*decision.trial) : mesh::refine(level->overlay, decision.spatial);
      rec.step_estimate_sq = std::pow(ind.spatial_sum(refined->plus_included), 2);
      next_dofs = free_vertex_count(*refined->mesh) * indices.size();
    } else {
      std::vector<param::MultiIndex> added;
      for (std::size_t i : decision.parametric) added.push_back(ind.detail[i]);
      next_indices = indices.united(added);
      rec.step_estimate_sq = std::pow(ind.parametric_sum(decision.parametric), 2);
      next_dofs = u.dim_x() * next_indices.size();
    }
    if (next_dofs > options.max_dof) {
      rec.step_estimate_sq.reset();
      finish(StopReason::DofCap);
      return trace;
    }

    rec.refinement = decision.kind;
    rec.marking_case = decision.case_taken;
    rec.marked = decision.kind == marking::Refinement::Spatial ? decision.spatial.size() : decision.parametric.size();
    rec.weighted_parametric = decision.weighted_parametric;
    rec.spatial_quantity = decision.spatial_quantity;
    rec.weak_checks = decision.weak_checks;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(rec);
    if (options.on_iteration) options.on_iteration(trace.records.back());
    if (options.keep_solutions) trace.solutions.push_back(u);

    if (refined) level = std::make_unique<MeshLevel>(refined->mesh, spec);
    indices = std::move(next_indices);
    previous = std::move(u);
  }
}

std::size_t cumulative_cost(const AdaptiveTrace& trace) {
  std::size_t s = 0;
  for (const auto& r : trace.records) s += r.n_total;
  return s;
}

std::size_t cumulative_cost(std::span<const std::size_t> dofs) {
  std::size_t s = 0;
  for (std::size_t n : dofs) s += n;
  return s;
}

galerkin::GalerkinSolution reference_solution(const AdaptiveTrace& trace, const model::ProblemSpec& spec,
                                              const galerkin::SolverOptions& solver) {
  if (!trace.final_mesh) throw InputDomainError("reference solution: trace has no final mesh");
  const mesh::TwoLevelOverlay overlay = mesh::uniform_refine(trace.final_mesh);
  const param::IndexSet indices = trace.final_indices.united(trace.final_detail.members());
  const galerkin::Discretization disc(overlay.fine, indices, spec);
  std::optional<galerkin::GalerkinSolution> warm;
  if (trace.final_solution) warm = galerkin::prolong(*trace.final_solution, disc.space_ptr(), indices);
  return disc.solve(solver, warm ? &warm->coefficients() : nullptr);
}

std::optional<double> effectivity_index(double eta, double energy, double reference_energy, double solver_tol) {
  const double gap = reference_energy - energy;
  if (!(gap > 10.0 * solver_tol * reference_energy)) return std::nullopt;
  return eta / std::sqrt(gap);
}

std::vector<std::optional<double>> effectivity(const AdaptiveTrace& trace, double reference_energy) {
  std::vector<std::optional<double>> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    out.push_back(effectivity_index(r.eta, r.energy_sq, reference_energy, trace.options.solver.tol));
  }
  return out;
}

void apply_reference(AdaptiveTrace& trace, double reference_energy) {
  trace.reference_energy = reference_energy;
  const auto zetas = effectivity(trace, reference_energy);
  for (std::size_t i = 0; i < trace.records.size(); ++i) trace.records[i].zeta = zetas[i];
  trace.contraction_ratios.clear();
  trace.max_contraction.reset();
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const double e0 = reference_energy - trace.records[i].energy_sq;
    const double e1 = reference_energy - trace.records[i + 1].energy_sq;
    if (!(e0 > 0.0) || !(e1 > 0.0)) continue;
    const double ratio = std::sqrt(e1 / e0);
    trace.contraction_ratios.push_back(ratio);
    trace.max_contraction = std::max(trace.max_contraction.value_or(0.0), ratio);
  }
}

double fit_rate(std::span<const double> dofs, std::span<const double> etas) {
  if (dofs.size() != etas.size()) throw InputDomainError("fit_rate: size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i] > 0.0 && etas[i] > 0.0) {
      x.push_back(std::log(dofs[i]));
      y.push_back(std::log(etas[i]));
    }
  }
  if (x.size() < 3) throw InputDomainError("fit_rate: need at least three records with N > 0 and eta > 0");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InputDomainError("fit_rate: degenerate abscissae");
  return sxy / sxx;
}

double fit_rate(const AdaptiveTrace& trace) {
  std::vector<double> n, e;
  for (const auto& r : trace.records) {
    n.push_back(static_cast<double>(r.n_total));
    e.push_back(r.eta);
  }
  return fit_rate(n, e);
}

std::vector<double> windowed_maxima(const AdaptiveTrace& trace, std::size_t window, std::size_t start) {
  std::vector<double> out;
  if (window == 0) throw InputDomainError("windowed maxima: window must be positive");
  for (std::size_t b = start; b < trace.records.size(); b += window) {
    double m = 0.0;
    for (std::size_t i = b; i < std::min(b + window, trace.records.size()); ++i) m = std::max(m, trace.records[i].eta);
    out.push_back(m);
  }
  return out;
}

}  // namespace sgfem::driver
