#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles/oracles.hpp"
#include "sgfem/marking.hpp"

using namespace sgfem;
using namespace sgfem::marking;
using estimators::ErrorIndicators;
using param::IndexSet;
using param::MultiIndex;

namespace {

using Ids = std::vector<std::size_t>;

mesh::TwoLevelOverlay lshape_overlay() {
  return mesh::uniform_refine(std::make_shared<const mesh::Mesh>(mesh::initial_lshape()));
}

ErrorIndicators make_indicators(std::vector<double> spatial, IndexSet detail, std::vector<double> parametric) {
  ErrorIndicators ind;
  ind.spatial = std::move(spatial);
  ind.detail = std::move(detail);
  ind.parametric = std::move(parametric);
  const auto t = estimators::overall(ind);
  ind.total = t.total;
  ind.spatial_total = t.spatial;
  ind.parametric_total = t.parametric;
  return ind;
}

std::size_t plus_index(const mesh::TwoLevelOverlay& ov, mesh::Point a, mesh::Point b) {
  for (std::size_t i = 0; i < ov.num_plus(); ++i) {
    const auto& e = ov.coarse->edge(ov.plus_edges[i]);
    const auto p = ov.coarse->vertex(e.a), q = ov.coarse->vertex(e.b);
    if ((p == a && q == b) || (p == b && q == a)) return i;
  }
  FAIL("edge not found");
  return 0;
}

double sum_sq(const std::vector<double>& v, const Ids& ids) {
  double s = 0.0;
  for (std::size_t i : ids) s += v[i] * v[i];
  return s;
}

}  // namespace

TEST_CASE("Doerfler examples") {
  const std::vector<double> v{4, 3, 2, 1};
  CHECK(doerfler(v, 0.5).ids == Ids{0});
  CHECK(doerfler(v, 1.0).ids == Ids{0, 1, 2, 3});
  CHECK(doerfler(v, 0.9).ids == Ids{0, 1});
  const std::vector<double> shuffled{1, 3, 4, 2};
  CHECK(doerfler(shuffled, 0.9).ids == Ids{1, 2});
  const std::vector<double> ties{1, 1, 1, 1};
  CHECK(doerfler(ties, 0.5).ids == Ids{0});
  CHECK(doerfler(ties, 0.8).ids == Ids{0, 1, 2});
  CHECK(doerfler(std::vector<double>{0, 0}, 0.5).ids.empty());
  CHECK(doerfler(std::vector<double>{}, 0.5).ids.empty());
  CHECK_THROWS_AS(doerfler(v, 0.0), InputDomainError);
  CHECK_THROWS_AS(doerfler(v, 1.5), InputDomainError);
  CHECK_THROWS_AS(doerfler(std::vector<double>{1, -1}, 0.5), InputDomainError);

  const auto r = doerfler(v, 0.5);
  CHECK(r.marked == 4.0);
  CHECK(r.largest_unmarked == 3.0);
  CHECK(r.bound == doctest::Approx(std::sqrt(0.75) / 0.5 * 4.0));
}

TEST_CASE("Doerfler matches exhaustive subset search") {
  std::mt19937 rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const unsigned range = trial % 3 == 0 ? 4 : 1000;  // small ranges force ties
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng() % (range + 1));
    for (int k = 1; k <= 10; ++k) {
      const double theta = k / 10.0;
      const auto r = doerfler(v, theta);
      const auto best = oracle::best_doerfler_subset(v, theta);
      CHECK(r.ids.size() == best.cardinality);
      CHECK(sum_sq(v, r.ids) == best.sum);
      CHECK(r.largest_unmarked <= r.bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("maximum marking examples") {
  const std::vector<double> v{4, 3, 2, 1};
  CHECK(maximum_mark(v, 0.3).ids == Ids{0, 1});
  CHECK(maximum_mark(v, 0.0).ids == Ids{0});
  CHECK(maximum_mark(v, 1.0).ids == Ids{0, 1, 2, 3});
  CHECK(maximum_mark(std::vector<double>{2, 5, 5}, 0.0).ids == Ids{1, 2});
  CHECK(maximum_mark(std::vector<double>{}, 0.5).ids.empty());
  CHECK_THROWS_AS(maximum_mark(v, -0.1), InputDomainError);

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng() % 20);
    for (auto& e : x) e = u(rng);
    const double theta = u(rng);
    const auto r = maximum_mark(x, theta);
    const double top = *std::max_element(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const bool in = std::binary_search(r.ids.begin(), r.ids.end(), i);
      CHECK(in == (x[i] >= (1 - theta) * top));
    }
    CHECK(r.largest_unmarked <= (1 - theta) * r.marked * (1 + 1e-12));
  }
}

TEST_CASE("parameter ranges") {
  MarkingParams p;
  CHECK_NOTHROW(p.validate(Criterion::A));
  p.theta_p = 0.0;
  CHECK_THROWS_AS(p.validate(Criterion::A), InputDomainError);
  CHECK_THROWS_AS(p.validate(Criterion::B), InputDomainError);
  CHECK_NOTHROW(p.validate(Criterion::C));
  CHECK_NOTHROW(p.validate(Criterion::D));
  p = MarkingParams{};
  p.theta_x = 0.0;
  CHECK_THROWS_AS(p.validate(Criterion::C), InputDomainError);
  p = MarkingParams{};
  p.vartheta = 0.0;
  CHECK_THROWS_AS(p.validate(Criterion::D), InputDomainError);
  CHECK(parse_criterion("c") == Criterion::C);
  CHECK(to_char(Criterion::D) == 'D');
  CHECK_THROWS_AS(parse_criterion("E"), InputDomainError);
  CHECK(to_string(Refinement::Spatial) == "spatial");
  CHECK(to_string(Refinement::Terminate) == "none");
}

TEST_CASE("criterion A chooses by the weighted comparison") {
  const auto ov = lshape_overlay();
  const IndexSet q = param::detail_index_set(IndexSet::initial());
  MarkingParams params;

  auto d = decide(Criterion::A, make_indicators({3, 0, 0, 0, 0}, q, {2}), params, ov);
  CHECK(d.kind == Refinement::Spatial);
  CHECK(d.case_taken == 'a');
  CHECK(d.spatial == Ids{0});
  CHECK(d.parametric.empty());
  CHECK(d.weak_checks == 1);

  d = decide(Criterion::A, make_indicators({2, 0, 0, 0, 0}, q, {3}), params, ov);
  CHECK(d.kind == Refinement::Parametric);
  CHECK(d.case_taken == 'b');
  CHECK(d.parametric == Ids{0});
  CHECK(d.spatial.empty());

  // equality goes to the spatial case
  d = decide(Criterion::A, make_indicators({3, 0, 0, 0, 0}, q, {3}), params, ov);
  CHECK(d.case_taken == 'a');

  params.vartheta = 0.5;
  d = decide(Criterion::A, make_indicators({2, 0, 0, 0, 0}, q, {3}), params, ov);
  CHECK(d.case_taken == 'a');

  d = decide(Criterion::A, make_indicators({0, 0, 0, 0, 0}, q, {0}), params, ov);
  CHECK(d.kind == Refinement::Terminate);
  CHECK(d.spatial.empty());
  CHECK(d.parametric.empty());

  CHECK_THROWS_AS(decide(Criterion::A, make_indicators({1, 2}, q, {1}), params, ov), SpaceMismatch);
}

TEST_CASE("criterion B compares against the trial refinement") {
  const auto ov = lshape_overlay();
  const IndexSet q = param::detail_index_set(IndexSet::initial());
  // shared edge of the two upper squares; its closure bisects both diagonals
  const std::size_t s = plus_index(ov, {0, 0}, {0, 1});
  const std::size_t d1 = plus_index(ov, {-1, 0}, {0, 1});
  const std::size_t d2 = plus_index(ov, {0, 0}, {1, 1});
  std::vector<double> spatial(5, 0.1);
  spatial[s] = 2.0;
  spatial[d1] = 0.5;
  spatial[d2] = 0.5;
  const MarkingParams params;

  auto ind = make_indicators(spatial, q, {2.122});
  const auto b = decide(Criterion::B, ind, params, ov);
  CHECK(b.trial_spatial == Ids{s});
  Ids expected{s, d1, d2};
  std::sort(expected.begin(), expected.end());
  CHECK(b.trial_included == expected);
  CHECK(b.trial.has_value());
  CHECK(b.spatial_quantity == doctest::Approx(std::sqrt(4.5)));
  CHECK(b.weighted_parametric == doctest::Approx(2.122));
  CHECK(b.case_taken == 'b');
  CHECK(b.kind == Refinement::Parametric);
  CHECK(b.parametric == Ids{0});
  CHECK(b.weak_checks == 2);

  // criterion A compares with all of N+ instead and refines in space
  CHECK(decide(Criterion::A, ind, params, ov).case_taken == 'a');

  ind = make_indicators(spatial, q, {2.1});
  const auto a = decide(Criterion::B, ind, params, ov);
  CHECK(a.case_taken == 'a');
  CHECK(a.spatial == Ids{s});
  CHECK(a.parametric.empty());
  CHECK(a.trial->mesh->num_vertices() == 11);
  CHECK(std::includes(a.trial_included.begin(), a.trial_included.end(), a.trial_spatial.begin(),
                      a.trial_spatial.end()));
}

TEST_CASE("criteria C and D use maximum marking in the parameter domain") {
  const auto ov = lshape_overlay();
  const IndexSet p{std::vector<MultiIndex>{MultiIndex(), MultiIndex::unit(1)}};
  const IndexSet q = param::detail_index_set(p);
  REQUIRE(q.size() == 3);
  MarkingParams params;
  params.theta_p = 0.3;
  const auto ind = make_indicators({0.1, 0.1, 0.1, 0.1, 0.1}, q, {3, 1, 2.5});

  const auto c = decide(Criterion::C, ind, params, ov);
  CHECK(c.case_taken == 'b');
  CHECK(c.parametric == Ids{0, 2});

  const auto d = decide(Criterion::D, ind, params, ov);
  CHECK(d.case_taken == 'b');
  CHECK(d.parametric == Ids{0, 2});
  CHECK(d.weighted_parametric == doctest::Approx(std::sqrt(9 + 6.25)));
  CHECK(d.weak_checks == 2);

  params.theta_p = 0.0;
  const auto c0 = decide(Criterion::C, ind, params, ov);
  CHECK(c0.parametric == Ids{0});
}

TEST_CASE("decisions never mark in both domains") {
  const auto ov = lshape_overlay();
  const IndexSet q = param::detail_index_set(IndexSet{std::vector<MultiIndex>{MultiIndex(), MultiIndex::unit(1)}});
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> sp(5), pa(3);
    for (auto& x : sp) x = u(rng);
    for (auto& x : pa) x = u(rng);
    MarkingParams params{0.1 + 0.9 * u(rng), 0.1 + 0.9 * u(rng), 0.2 + 2 * u(rng)};
    for (Criterion c : {Criterion::A, Criterion::B, Criterion::C, Criterion::D}) {
      const auto d = decide(c, make_indicators(sp, q, pa), params, ov);
      CHECK(d.kind != Refinement::Terminate);
      CHECK(d.spatial.empty() != d.parametric.empty());
      CHECK((d.kind == Refinement::Spatial) == !d.spatial.empty());
      if (d.trial) {
        CHECK(std::includes(d.trial_included.begin(), d.trial_included.end(), d.trial_spatial.begin(),
                            d.trial_spatial.end()));
      }
    }
  }
}
