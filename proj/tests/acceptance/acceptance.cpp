// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "sgfem/driver.hpp"
#include "sgfem/enhanced.hpp"
#include "sgfem/estimators.hpp"
#include "sgfem/marking.hpp"
#include "sgfem/meshkit.hpp"
#include "sgfem/paramkit.hpp"

using namespace sgfem;
using driver::AdaptiveTrace;
using driver::RunOptions;
using marking::Criterion;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

const char* name(Criterion c) {
  switch (c) {
    case Criterion::A: return "A";
    case Criterion::B: return "B";
    case Criterion::C: return "C";
    case Criterion::D: return "D";
  }
  return "?";
}

// Desk runs shared by several criteria.
struct DeskRun {
  Criterion criterion;
  double theta_x;
  AdaptiveTrace trace;
  std::string error;
};

constexpr std::array<Criterion, 4> kCriteria{Criterion::A, Criterion::B, Criterion::C, Criterion::D};

DeskRun desk_run(Criterion c, double theta_x) {
  RunOptions o;
  o.criterion = c;
  o.params.theta_x = theta_x;
  o.params.theta_p = 0.5;
  o.params.vartheta = 1.0;
  o.tol = 1e-2;
  o.max_dof = 200000;
  o.solver.tol = 1e-10;
  // bounds are checked here rather than aborting the run
  o.enforce_bounds = false;
  DeskRun r{c, theta_x, {}, ""};
  try {
    r.trace = driver::run_adaptive(model::ProblemSpec::benchmark(), o);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

std::set<std::pair<double, double>> interior_points(const mesh::Mesh& m) {
  std::set<std::pair<double, double>> s;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!m.on_boundary(static_cast<mesh::VertexId>(v))) s.insert({m.vertices()[v].x, m.vertices()[v].y});
  }
  return s;
}

Outcome legendre_and_coupling() {
  double worst = 0.0;
  for (unsigned n = 0; n <= 20; ++n) {
    for (unsigned m = 0; m <= 20; ++m) {
      const double v = oracle::uniform_expectation([&](double y) { return param::legendre(n, y) * param::legendre(m, y); });
      worst = std::max(worst, std::abs(v - (n == m ? 1.0 : 0.0)));
    }
  }
  double coupling = 0.0;
  for (unsigned n = 1; n <= 20; ++n) {
    const double v = oracle::uniform_expectation(
        [&](double y) { return y * oracle::legendre_normalized(n, y) * oracle::legendre_normalized(n - 1, y); });
    coupling = std::max(coupling, std::abs(v - param::coupling_coefficient(n)));
  }
  return {worst < 1e-12 && coupling < 1e-12,
          "orthonormality defect " + fmt(worst) + ", coupling defect " + fmt(coupling)};
}

Outcome nvb_fuzz() {
  std::mt19937 rng(20240601);
  const auto initial = std::make_shared<const mesh::Mesh>(mesh::initial_lshape());
  mesh::MeshPtr m = initial;
  int calls = 0;
  double min_angle = 90.0;
  std::string problem;
  while (calls < 1000 && problem.empty()) {
    if (m->num_vertices() > 3000) m = initial;
    const auto ov = mesh::uniform_refine(m);
    const int kind = calls % 10;
    if (kind == 0) {
      const std::vector<std::size_t> none;
      if (!(*mesh::refine(ov, none).mesh == *m)) problem = "refine(T, {}) differs from T";
    } else if (kind == 5) {
      std::vector<std::size_t> all(ov.num_plus());
      std::iota(all.begin(), all.end(), std::size_t{0});
      const auto r = mesh::refine(ov, all);
      if (interior_points(*r.mesh) != interior_points(*ov.fine)) problem = "refine(T, N+) spans a different space";
    }
    std::uniform_int_distribution<std::size_t> pick(0, ov.num_plus() - 1);
    std::vector<std::size_t> marked{pick(rng)};
    if (rng() % 2) marked.push_back(pick(rng));
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
    const auto r = mesh::refine(ov, marked);
    ++calls;
    const auto audit = mesh::mesh_audit(*r.mesh);
    if (!audit.ok()) problem = "audit: " + audit.problem;
    min_angle = std::min(min_angle, audit.min_angle_deg);
    if (audit.min_angle_deg < 22.5 - 1e-9) problem = "angle " + fmt(audit.min_angle_deg);
    m = r.mesh;
  }
  return {problem.empty(), std::to_string(calls) + " refine calls, min angle " + fmt(min_angle) +
                               (problem.empty() ? "" : ", " + problem)};
}

Outcome doerfler_oracle() {
  std::mt19937 rng(4242);
  int mismatches = 0, cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng() % 12);
    for (auto& x : v) x = static_cast<double>(rng() % (trial % 2 ? 5 : 1000));
    for (int k = 1; k <= 10; ++k) {
      const double theta = k / 10.0;
      const auto r = marking::doerfler(v, theta);
      const auto best = oracle::best_doerfler_subset(v, theta);
      double sum = 0.0;
      for (std::size_t i : r.ids) sum += v[i] * v[i];
      ++cases;
      if (r.ids.size() != best.cardinality || sum != best.sum) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome galerkin_identities(const std::vector<DeskRun>& runs) {
  double worst = 0.0;
  std::size_t steps = 0, drops = 0;
  for (const auto& run : runs) {
    if (!run.error.empty()) return {false, "run failed: " + run.error};
    const auto& rec = run.trace.records;
    for (std::size_t l = 1; l < rec.size(); ++l) {
      ++steps;
      worst = std::max(worst, rec[l].pythagoras_defect.value_or(INFINITY));
      if (rec[l].energy_sq < rec[l - 1].energy_sq) ++drops;
    }
  }
  return {worst < 1e-6 && drops == 0,
          std::to_string(steps) + " steps, max defect " + fmt(worst) + ", energy decreases " + std::to_string(drops)};
}

Outcome reduction_bound(const std::vector<DeskRun>& runs) {
  double worst = 0.0;
  std::size_t steps = 0;
  for (const auto& run : runs) {
    if (!run.error.empty()) return {false, "run failed: " + run.error};
    for (std::size_t l = 1; l < run.trace.records.size(); ++l) {
      ++steps;
      worst = std::max(worst, run.trace.records[l].reduction_ratio.value_or(INFINITY));
    }
  }
  return {worst <= 1 + 1e-6, std::to_string(steps) + " steps, max (lambda/K) eta^2 / |u' - u|^2 = " + fmt(worst)};
}

Outcome efficiency() {
  const auto spec = model::ProblemSpec::benchmark();
  const auto bounds = model::contrast_bounds(spec);
  RunOptions o;
  o.tol = 1e-3;
  o.max_dof = 8000;
  o.keep_solutions = true;
  const auto trace = driver::run_adaptive(spec, o);

  std::vector<std::size_t> eligible;
  for (std::size_t l = 0; l < trace.solutions.size(); ++l) {
    const auto& u = trace.solutions[l];
    const auto ov = mesh::uniform_refine(u.mesh_ptr());
    const std::size_t fine_dim = galerkin::FemSpace(ov.fine).dim();
    const std::size_t q = param::detail_index_set(u.indices()).size();
    if (fine_dim * u.card() + u.dim_x() * q <= 20000) eligible.push_back(l);
  }
  if (eligible.size() < 5) return {false, "only " + std::to_string(eligible.size()) + " coarse levels"};

  std::vector<double> ratios;
  double lower = 0.0;
  std::string levels;
  for (int k = 0; k < 5; ++k) {
    const std::size_t l = eligible[(k * (eligible.size() - 1) + 2) / 4];
    const auto& u = trace.solutions[l];
    const auto ov = mesh::uniform_refine(u.mesh_ptr());
    const auto ind = estimators::estimate(u, ov, spec);
    const auto uh = galerkin::solve_enhanced(ov, u.indices(), ind.detail, spec);
    const auto up = galerkin::prolong(u, ov.fine, uh.combined.indices());
    const galerkin::Discretization fine(ov.fine, uh.combined.indices(), spec);
    const Eigen::MatrixXd diff = uh.combined.coefficients() - up.coefficients();
    const double err2 = fine.energy(diff, diff);
    lower = std::max(lower, bounds.lambda / driver::AdaptiveTrace::K * ind.total * ind.total / err2);
    ratios.push_back(std::sqrt(err2) / ind.total);
    levels += (levels.empty() ? "" : ",") + std::to_string(l);
  }
  double mean = 0.0;
  for (double r : ratios) mean += r / ratios.size();
  double spread = 0.0;
  for (double r : ratios) spread = std::max(spread, std::abs(r / mean - 1.0));
  std::string list;
  for (double r : ratios) list += (list.empty() ? "" : " ") + fmt(r);
  return {lower <= 1 + 1e-6 && spread <= 0.2,
          "levels " + levels + ": max (lambda/K) eta^2 / |u^ - u|^2 = " + fmt(lower) + ", |u^ - u|/eta = " + list +
              ", deviation from mean " + fmt(100 * spread, 3) + "%"};
}

Outcome convergence(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& run : runs) {
    detail += detail.empty() ? "" : "; ";
    detail += std::string(name(run.criterion)) + ": ";
    if (!run.error.empty()) {
      ok = false;
      detail += "failed (" + run.error + ")";
      continue;
    }
    const double rate = driver::fit_rate(run.trace);
    const bool pass = run.trace.reached_tolerance() && rate >= -0.45 && rate <= -0.25;
    ok = ok && pass;
    detail += driver::to_string(run.trace.stop) + ", L = " + std::to_string(run.trace.records.size() - 1) +
              ", N = " + std::to_string(run.trace.records.back().n_total) + ", rate " + fmt(rate, 3);
  }
  return {ok, detail};
}

Outcome effectivity(std::vector<DeskRun>& runs) {
  const auto spec = model::ProblemSpec::benchmark();
  bool ok = true;
  std::string detail;
  for (auto& run : runs) {
    detail += detail.empty() ? "" : "; ";
    detail += std::string(name(run.criterion)) + ": ";
    if (!run.error.empty()) {
      ok = false;
      detail += "failed";
      continue;
    }
    const auto ref = driver::reference_solution(run.trace, spec);
    driver::apply_reference(run.trace, galerkin::energy_norm_sq(ref, spec));
    double lo = INFINITY, hi = 0.0;
    std::size_t undefined = 0;
    for (const auto& r : run.trace.records) {
      if (!r.zeta) {
        ++undefined;
        continue;
      }
      lo = std::min(lo, *r.zeta);
      hi = std::max(hi, *r.zeta);
    }
    const bool pass = undefined == 0 && lo >= 0.5 && hi <= 1.0 && hi / lo < 1.5;
    ok = ok && pass;
    detail += "zeta in [" + fmt(lo) + ", " + fmt(hi) + "], max/min " + fmt(hi / lo);
    if (undefined) detail += ", " + std::to_string(undefined) + " undefined";
  }
  return {ok, detail};
}

Outcome cost_ordering(const std::vector<DeskRun>& runs) {
  std::size_t lo = SIZE_MAX, hi = 0;
  std::string detail;
  for (const auto& run : runs) {
    if (!run.error.empty()) return {false, std::string(name(run.criterion)) + " failed: " + run.error};
    if (!run.trace.reached_tolerance()) return {false, std::string(name(run.criterion)) + " did not reach tol"};
    const std::size_t c = run.trace.cost();
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    detail += std::string(detail.empty() ? "" : ", ") + name(run.criterion) + " " + std::to_string(c);
  }
  const double factor = static_cast<double>(hi) / static_cast<double>(lo);
  return {factor <= 3.0, "costs " + detail + ", spread factor " + fmt(factor, 3)};
}

Outcome weak_marking(const std::vector<const std::vector<DeskRun>*>& groups) {
  std::size_t checks = 0, decisions = 0;
  for (const auto* runs : groups) {
    for (const auto& run : *runs) {
      if (!run.error.empty()) return {false, "run failed: " + run.error};
      for (const auto& r : run.trace.records) {
        if (r.refinement == marking::Refinement::Terminate) continue;
        ++decisions;
        checks += r.weak_checks;
        if (r.weak_checks == 0) return {false, "decision without a weak-marking check"};
      }
    }
  }
  return {checks > 0, std::to_string(checks) + " kernel checks over " + std::to_string(decisions) +
                          " decisions, no violation"};
}

}  // namespace

int main() {
  report(1, "Legendre orthonormality and coupling coefficients", legendre_and_coupling);
  report(2, "NVB fuzz", nvb_fuzz);
  report(3, "Doerfler marking against exhaustive search", doerfler_oracle);

  std::vector<DeskRun> main_runs, wide_runs;
  for (Criterion c : kCriteria) main_runs.push_back(desk_run(c, 0.5));
  for (Criterion c : kCriteria) wide_runs.push_back(desk_run(c, 0.7));
  std::vector<DeskRun> all = main_runs;
  all.insert(all.end(), wide_runs.begin(), wide_runs.end());

  report(4, "Galerkin orthogonality and energy monotonicity", [&] { return galerkin_identities(all); });
  report(5, "Error reduction lower bound", [&] { return reduction_bound(all); });
  report(6, "Estimator efficiency against the enhanced solution", efficiency);
  report(7, "Convergence of criteria A-D at (0.5, 0.5)", [&] { return convergence(main_runs); });
  report(8, "Effectivity indices", [&] { return effectivity(main_runs); });
  report(9, "Cost spread at (0.7, 0.5)", [&] { return cost_ordering(wide_runs); });
  report(10, "Weak marking bounds", [&] { return weak_marking({&main_runs, &wide_runs}); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
