#pragma once

#include <span>
#include <vector>

#include "sgfem/galerkin.hpp"

namespace sgfem::estimators {

struct ErrorIndicators {
  /// η(z) for z = overlay.plus_vertices[i].
  std::vector<double> spatial;
  /// Q and η(ν) for ν = detail[i].
  param::IndexSet detail;
  std::vector<double> parametric;
  double spatial_total = 0.0;     // η(N⁺)
  double parametric_total = 0.0;  // η(Q)
  double total = 0.0;             // η

  /// η(M) over positions into `spatial`.
  double spatial_sum(std::span<const std::size_t> ids) const;
  /// η(𝔐) over positions into `detail`.
  double parametric_sum(std::span<const std::size_t> ids) const;
};

struct Totals {
  double total = 0.0;
  double spatial = 0.0;
  double parametric = 0.0;
};

Totals overall(std::span<const double> spatial, std::span<const double> parametric);
Totals overall(const ErrorIndicators& indicators);

/// Two-level indicators η(z), z ∈ N⁺. `fine` must live on overlay.fine.
std::vector<double> spatial_indicators(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                                       const galerkin::StiffnessPtr& fine);
std::vector<double> spatial_indicators(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                                       const model::ProblemSpec& spec);

/// Hierarchical indicators η(ν), ν ∈ Q. `coarse` must live on u's mesh.
std::vector<double> parametric_indicators(const galerkin::GalerkinSolution& u, const param::IndexSet& detail,
                                          const galerkin::StiffnessPtr& coarse);
std::vector<double> parametric_indicators(const galerkin::GalerkinSolution& u, const param::IndexSet& detail,
                                          const model::ProblemSpec& spec);

ErrorIndicators estimate(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                         const galerkin::StiffnessPtr& coarse, const galerkin::StiffnessPtr& fine);
ErrorIndicators estimate(const galerkin::GalerkinSolution& u, const mesh::TwoLevelOverlay& overlay,
                         const model::ProblemSpec& spec);

}  // namespace sgfem::estimators
