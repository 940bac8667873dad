#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgfem/estimators.hpp"
#include "sgfem/galerkin.hpp"
#include "sgfem/marking.hpp"
#include "sgfem/model.hpp"

namespace sgfem::driver {

struct IterationRecord;

struct RunOptions {
  marking::Criterion criterion = marking::Criterion::A;
  marking::MarkingParams params{};
  double tol = 1e-2;
  std::size_t max_iter = 1000;
  std::size_t max_dof = 200000;
  galerkin::SolverOptions solver{};
  /// Initial mesh; the L-shape when null.
  mesh::MeshPtr initial_mesh;
  /// Throw InvariantViolation when the online error-reduction check fails.
  bool enforce_bounds = true;
  /// Keep every iterate u_ℓ in the trace (memory grows with the run).
  bool keep_solutions = false;
  /// Called after every iteration record is complete.
  std::function<void(const IterationRecord&)> on_iteration;
};

enum class StopReason { ToleranceReached, IterationCap, DofCap, ZeroEstimate };

std::string to_string(StopReason r);

struct IterationRecord {
  std::size_t iter = 0;
  std::size_t dim_x = 0;
  std::size_t card_p = 0;
  std::size_t n_total = 0;
  double eta = 0.0;
  double eta_spatial = 0.0;
  double eta_param = 0.0;
  double energy_sq = 0.0;  // ‖u_ℓ‖²_B
  std::uint32_t max_active_dim = 0;
  std::size_t solver_iters = 0;
  double solver_residual = 0.0;
  std::size_t cum_cost = 0;
  double wall_seconds = 0.0;

  /// Decision taken after estimating; Terminate on the last record.
  marking::Refinement refinement = marking::Refinement::Terminate;
  char marking_case = '-';
  std::size_t marked = 0;
  double weighted_parametric = 0.0;
  double spatial_quantity = 0.0;
  std::size_t weak_checks = 0;
  /// η_ℓ(N⁺ ∩ N_{ℓ+1}, 𝔐_ℓ)² for the step leaving this iterate.
  std::optional<double> step_estimate_sq;
  /// ‖u_ℓ − u_{ℓ-1}‖²_B computed directly, and the Pythagoras defect
  /// |‖u_ℓ‖² − ‖u_{ℓ-1}‖² − ‖u_ℓ − u_{ℓ-1}‖²| / ‖u_ℓ‖².
  std::optional<double> diff_energy_sq;
  std::optional<double> pythagoras_defect;
  /// (λ/K) η_{ℓ-1}(R, 𝔐)² / ‖u_ℓ − u_{ℓ-1}‖²; at most 1 + 1e-6 by theory.
  std::optional<double> reduction_ratio;

  std::optional<double> zeta;
};

struct AdaptiveTrace {
  RunOptions options;
  double sigma = 0.0;
  double amplitude = 0.0;
  double tau = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
  static constexpr double K = 3.0;

  std::vector<IterationRecord> records;
  StopReason stop = StopReason::IterationCap;

  mesh::MeshPtr final_mesh;
  param::IndexSet final_indices;
  param::IndexSet final_detail;
  std::optional<galerkin::GalerkinSolution> final_solution;
  std::vector<galerkin::GalerkinSolution> solutions;  // when keep_solutions

  std::optional<double> reference_energy;
  std::vector<double> contraction_ratios;  // e_{ℓ+1}/e_ℓ from the reference
  std::optional<double> max_contraction;

  std::size_t cost() const;
  bool reached_tolerance() const { return stop == StopReason::ToleranceReached; }
};

/// Solver failure inside run_adaptive; carries the records completed so far.
class RunFailure : public SolverFailure {
 public:
  RunFailure(const SolverFailure& cause, AdaptiveTrace partial)
      : SolverFailure(cause.what(), cause.residual_history()),
        partial_(std::make_shared<const AdaptiveTrace>(std::move(partial))) {}
  const AdaptiveTrace& partial_trace() const { return *partial_; }

 private:
  std::shared_ptr<const AdaptiveTrace> partial_;
};

AdaptiveTrace run_adaptive(const model::ProblemSpec& spec, const RunOptions& options);

std::size_t cumulative_cost(const AdaptiveTrace& trace);
std::size_t cumulative_cost(std::span<const std::size_t> dofs);

/// Galerkin solution on the uniform refinement of the final mesh with the
/// index set P_L ∪ Q_L; contains every V_ℓ of the run.
galerkin::GalerkinSolution reference_solution(const AdaptiveTrace& trace, const model::ProblemSpec& spec,
                                              const galerkin::SolverOptions& solver = {});

/// ζ_ℓ = η_ℓ / (E_ref − E_ℓ)^{1/2}, undefined when E_ref − E_ℓ <= 10·solver_tol·E_ref.
std::optional<double> effectivity_index(double eta, double energy, double reference_energy, double solver_tol);

std::vector<std::optional<double>> effectivity(const AdaptiveTrace& trace, double reference_energy);

/// Fills zeta, contraction_ratios and max_contraction from a reference energy.
void apply_reference(AdaptiveTrace& trace, double reference_energy);

/// Least-squares slope of log η against log N over records with N, η > 0.
double fit_rate(const AdaptiveTrace& trace);
double fit_rate(std::span<const double> dofs, std::span<const double> etas);

/// Maxima of η over consecutive windows of `window` iterations starting at `start`.
std::vector<double> windowed_maxima(const AdaptiveTrace& trace, std::size_t window = 10, std::size_t start = 5);

}  // namespace sgfem::driver
