#include "sgfem/marking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgfem::marking {

namespace {

void check_values(std::span<const double> values) {
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputDomainError("marking: indicators must be finite and >= 0");
  }
}

void finish(MarkResult& r, std::span<const double> values) {
  std::sort(r.ids.begin(), r.ids.end());
  double s = 0.0;
  for (std::size_t i : r.ids) s += values[i] * values[i];
  r.marked = std::sqrt(s);
  std::vector<bool> in(values.size(), false);
  for (std::size_t i : r.ids) in[i] = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!in[i]) r.largest_unmarked = std::max(r.largest_unmarked, values[i]);
  }
}

void assert_weak(const MarkResult& r, const char* kernel) {
  if (r.largest_unmarked > r.bound * (1.0 + 1e-12) + 1e-300) {
    throw InvariantViolation(std::string(kernel) + ": unmarked value " + std::to_string(r.largest_unmarked) +
                             " exceeds the weak-marking bound " + std::to_string(r.bound));
  }
}

}  // namespace

Criterion parse_criterion(const std::string& text) {
  if (text == "A" || text == "a") return Criterion::A;
  if (text == "B" || text == "b") return Criterion::B;
  if (text == "C" || text == "c") return Criterion::C;
  if (text == "D" || text == "d") return Criterion::D;
  throw InputDomainError("criterion must be one of A, B, C, D (got '" + text + "')");
}

char to_char(Criterion c) { return static_cast<char>('A' + static_cast<int>(c)); }

std::string to_string(Refinement r) {
  switch (r) {
    case Refinement::Spatial:
      return "spatial";
    case Refinement::Parametric:
      return "parametric";
    case Refinement::Terminate:
      return "none";
  }
  return "none";
}

void MarkingParams::validate(Criterion criterion) const {
  if (!(theta_x > 0.0 && theta_x <= 1.0)) throw InputDomainError("theta_x must lie in (0, 1]");
  const bool maximum = criterion == Criterion::C || criterion == Criterion::D;
  if (maximum ? !(theta_p >= 0.0 && theta_p <= 1.0) : !(theta_p > 0.0 && theta_p <= 1.0)) {
    throw InputDomainError(maximum ? "theta_p must lie in [0, 1] for criteria C and D"
                                   : "theta_p must lie in (0, 1] for criteria A and B");
  }
  if (!(vartheta > 0.0) || !std::isfinite(vartheta)) throw InputDomainError("vartheta must be positive");
}

MarkResult doerfler(std::span<const double> values, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InputDomainError("doerfler: theta must lie in (0, 1]");
  check_values(values);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  double total = 0.0;
  for (std::size_t i : order) total += values[i] * values[i];
  MarkResult r;
  if (total > 0.0) {
    const double target = theta * theta * total;
    double prefix = 0.0;
    for (std::size_t i : order) {
      r.ids.push_back(i);
      prefix += values[i] * values[i];
      if (prefix >= target) break;
    }
  }
  finish(r, values);
  r.bound = std::sqrt(std::max(0.0, 1.0 - theta * theta)) / theta * r.marked;
  assert_weak(r, "doerfler");
  return r;
}

MarkResult maximum_mark(std::span<const double> values, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InputDomainError("maximum marking: theta must lie in [0, 1]");
  check_values(values);
  MarkResult r;
  if (!values.empty()) {
    const double threshold = (1.0 - theta) * *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] >= threshold) r.ids.push_back(i);
    }
  }
  finish(r, values);
  r.bound = (1.0 - theta) * r.marked;
  assert_weak(r, "maximum marking");
  return r;
}

MarkingDecision decide(Criterion criterion, const estimators::ErrorIndicators& indicators,
                       const MarkingParams& params, const mesh::TwoLevelOverlay& overlay) {
  params.validate(criterion);
  if (indicators.spatial.size() != overlay.num_plus()) {
    throw SpaceMismatch("decide: spatial indicators do not match the overlay");
  }
  MarkingDecision d;
  if (indicators.total == 0.0) return d;

  const bool maximum = criterion == Criterion::C || criterion == Criterion::D;
  auto mark_parametric = [&] {
    ++d.weak_checks;
    return maximum ? maximum_mark(indicators.parametric, params.theta_p)
                   : doerfler(indicators.parametric, params.theta_p);
  };
  auto mark_spatial = [&] {
    ++d.weak_checks;
    return doerfler(indicators.spatial, params.theta_x);
  };

  if (criterion == Criterion::A || criterion == Criterion::C) {
    d.weighted_parametric = params.vartheta * indicators.parametric_total;
    d.spatial_quantity = indicators.spatial_total;
    if (d.weighted_parametric <= d.spatial_quantity) {
      d.case_taken = 'a';
      d.kind = Refinement::Spatial;
      d.spatial = d.trial_spatial = mark_spatial().ids;
    } else {
      d.case_taken = 'b';
      d.kind = Refinement::Parametric;
      d.parametric = d.trial_parametric = mark_parametric().ids;
    }
    return d;
  }

  const MarkResult param_trial = mark_parametric();
  const MarkResult spatial_trial = mark_spatial();
  d.trial_parametric = param_trial.ids;
  d.trial_spatial = spatial_trial.ids;
  d.trial = mesh::refine(overlay, spatial_trial.ids);
  d.trial_included = d.trial->plus_included;
  d.weighted_parametric = params.vartheta * param_trial.marked;
  d.spatial_quantity = indicators.spatial_sum(d.trial_included);
  if (d.weighted_parametric <= d.spatial_quantity) {
    d.case_taken = 'a';
    d.kind = Refinement::Spatial;
    d.spatial = d.trial_spatial;
  } else {
    d.case_taken = 'b';
    d.kind = Refinement::Parametric;
    d.parametric = d.trial_parametric;
  }
  return d;
}

}  // namespace sgfem::marking
