#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgfem/estimators.hpp"
#include "sgfem/meshkit.hpp"

namespace sgfem::marking {

enum class Criterion { A, B, C, D };

Criterion parse_criterion(const std::string& text);
char to_char(Criterion c);

struct MarkingParams {
  double theta_x = 0.5;
  double theta_p = 0.5;
  double vartheta = 1.0;

  /// Throws InputDomainError for values outside the criterion's ranges.
  void validate(Criterion criterion) const;
};

struct MarkResult {
  std::vector<std::size_t> ids;  // positions into the input, ascending
  double marked = 0.0;           // root-sum-square of the marked values
  double largest_unmarked = 0.0;
  double bound = 0.0;            // weak-marking bound the unmarked values obey
};

/// Minimal-cardinality Dörfler set: greedy by descending value, equal values
/// by ascending position. Asserts the weak-marking bound.
MarkResult doerfler(std::span<const double> values, double theta);

/// {i : values[i] >= (1-θ) max}. Asserts the weak-marking bound.
MarkResult maximum_mark(std::span<const double> values, double theta);

enum class Refinement { Spatial, Parametric, Terminate };

std::string to_string(Refinement r);

struct MarkingDecision {
  Refinement kind = Refinement::Terminate;
  /// M ⊆ N⁺ as positions into overlay.plus_vertices.
  std::vector<std::size_t> spatial;
  /// 𝔐 ⊆ Q as positions into indicators.detail.
  std::vector<std::size_t> parametric;

  char case_taken = '-';  // 'a' spatial, 'b' parametric
  /// ϑ times the parametric quantity and the spatial quantity that were compared.
  double weighted_parametric = 0.0;
  double spatial_quantity = 0.0;
  /// Candidate sets M̃ and 𝔐̃ (criteria A and C only fill the chosen one).
  std::vector<std::size_t> trial_spatial;
  std::vector<std::size_t> trial_parametric;
  /// B, D: R̃ = N⁺ ∩ Ñ as positions into N⁺, and the trial mesh.
  std::vector<std::size_t> trial_included;
  std::optional<mesh::RefineResult> trial;
  std::size_t weak_checks = 0;  // kernel calls whose bound was verified
};

MarkingDecision decide(Criterion criterion, const estimators::ErrorIndicators& indicators,
                       const MarkingParams& params, const mesh::TwoLevelOverlay& overlay);

}  // namespace sgfem::marking
