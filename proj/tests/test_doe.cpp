#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <doctest.h>

#include "otto/doe.hpp"
#include "otto/types.hpp"

using namespace otto;

namespace {

ApplicationDescription two_knob_description() {
  ApplicationDescription d;
  d.app_name = "grid";
  d.knobs = {KnobDomain::range("a", 0, 5, 1), KnobDomain::range("b", 0, 5, 1)};
  d.efps = {"t"};
  return d;
}

}  // namespace

TEST_SUITE("doe") {

TEST_CASE("full factorial enumerates lexicographically") {
  std::vector<KnobDomain> knobs = {KnobDomain{"a", {0, 1}}, KnobDomain{"b", {10, 20, 30}}};
  auto grid = full_factorial(knobs);
  REQUIRE(grid.size() == 6);
  CHECK(grid[0] == KnobConfig{{0, 10}});
  CHECK(grid[1] == KnobConfig{{0, 20}});
  CHECK(grid[2] == KnobConfig{{0, 30}});
  CHECK(grid[3] == KnobConfig{{1, 10}});
  CHECK(grid[5] == KnobConfig{{1, 30}});
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("full factorial enforces the size cap") {
  std::vector<KnobDomain> knobs = {KnobDomain{"a", {0, 1, 2, 3}}, KnobDomain{"b", {0, 1, 2}}};
  CHECK(full_factorial(knobs, 12).size() == 12);
  CHECK_THROWS_AS(full_factorial(knobs, 11), Error);
}

TEST_CASE("restrictions filter the grid in place") {
  std::vector<KnobDomain> knobs = {KnobDomain::range("a", 0, 3, 1), KnobDomain::range("b", 0, 3, 1)};
  auto grid = full_factorial(knobs);
  auto r = Restriction::compile("a + b <= 3", knobs);
  auto kept = apply_restrictions(grid, r);

  std::vector<KnobConfig> expected;
  for (const auto& c : grid)
    if (c.values[0] + c.values[1] <= 3) expected.push_back(c);
  CHECK(kept == expected);

  auto nothing = Restriction::compile("a > 99", knobs);
  CHECK_THROWS_AS(apply_restrictions(grid, nothing), Error);
}

TEST_CASE("spherical correlation closed form") {
  auto spec = CorrelationSpec::spherical(0.2);
  CHECK(correlation(0.0, spec) == doctest::Approx(1.0));
  CHECK(correlation(0.2, spec) == doctest::Approx(0.0));
  CHECK(correlation(0.3, spec) == 0.0);
  // gamma(t) = 1.5 t - 0.5 t^3 at t = h/epsilon
  const double h = 0.1, t = h / 0.2;
  CHECK(correlation(h, spec) == doctest::Approx(1.0 - (1.5 * t - 0.5 * t * t * t)));
  // Monotone decreasing inside the range.
  double prev = 1.0;
  for (double x = 0.01; x <= 0.2; x += 0.01) {
    const double c = correlation(x, spec);
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("normalize_configs maps domains onto the unit cube") {
  std::vector<KnobDomain> knobs = {KnobDomain{"a", {10, 20, 30}}, KnobDomain{"b", {5}}};
  std::vector<KnobConfig> configs = {KnobConfig{{10, 5}}, KnobConfig{{20, 5}}, KnobConfig{{30, 5}}};
  auto m = normalize_configs(knobs, configs);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 0) == doctest::Approx(0.5));
  CHECK(m(2, 0) == 1.0);
  CHECK(m(0, 1) == 0.0);  // single-valued domain pins to 0
}

TEST_CASE("correlation determinant of a pair matches 1 - c^2") {
  auto spec = CorrelationSpec::spherical(0.5);
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 0.3;
  const double c = correlation(0.3, spec);
  CHECK(correlation_det(pts, spec) == doctest::Approx(1.0 - c * c));

  auto m = correlation_matrix(pts, spec);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 1.0);
  CHECK(m(0, 1) == doctest::Approx(c));
  CHECK(m(1, 0) == doctest::Approx(c));
}

TEST_CASE("dmax selection beats random subsets") {
  // 30 candidate points on a jittered 1-D lattice; compare the exchange
  // search against the 95th percentile of random n-subsets.
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n_cand = 30, n_sel = 6;
  Eigen::MatrixXd cand(n_cand, 2);
  for (int i = 0; i < n_cand; ++i) {
    cand(i, 0) = u(rng);
    cand(i, 1) = u(rng);
  }
  auto spec = CorrelationSpec::spherical(0.4);

  auto idx = dmax_select(cand, n_sel, spec, 7);
  REQUIRE(idx.size() == n_sel);
  std::set<std::size_t> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == n_sel);
  for (auto i : idx) CHECK(i < static_cast<std::size_t>(n_cand));

  Eigen::MatrixXd chosen(n_sel, 2);
  for (int i = 0; i < n_sel; ++i) chosen.row(i) = cand.row(static_cast<Eigen::Index>(idx[i]));
  const double best = correlation_det(chosen, spec);

  std::vector<double> dets;
  std::vector<int> pool(n_cand);
  for (int i = 0; i < n_cand; ++i) pool[i] = i;
  for (int trial = 0; trial < 100; ++trial) {
    std::shuffle(pool.begin(), pool.end(), rng);
    Eigen::MatrixXd sub(n_sel, 2);
    for (int i = 0; i < n_sel; ++i) sub.row(i) = cand.row(pool[i]);
    dets.push_back(correlation_det(sub, spec));
  }
  std::sort(dets.begin(), dets.end());
  CHECK(best >= dets[94]);

  // Determinism: the same seed reproduces the same subset.
  CHECK(dmax_select(cand, n_sel, spec, 7) == idx);
}

TEST_CASE("dmax selection of everything is the identity set") {
  Eigen::MatrixXd cand(3, 1);
  cand << 0.0, 0.5, 1.0;
  auto spec = CorrelationSpec::spherical(0.3);
  auto idx = dmax_select(cand, 3, spec, 1);
  std::set<std::size_t> got(idx.begin(), idx.end());
  CHECK(got == std::set<std::size_t>{0, 1, 2});
}

TEST_CASE("map_to_domain snaps to nearest free config, ties to the lower") {
  std::vector<KnobDomain> knobs = {KnobDomain{"a", {0, 10}}};
  std::vector<KnobConfig> grid = {KnobConfig{{0}}, KnobConfig{{10}}};

  Eigen::MatrixXd mid(1, 1);
  mid << 0.5;  // equidistant: lower lexicographic config wins
  auto got = map_to_domain(mid, grid, knobs, {});
  REQUIRE(got.size() == 1);
  CHECK(got[0] == KnobConfig{{0}});

  // Nearest already taken: falls to the next one.
  got = map_to_domain(mid, grid, knobs, {KnobConfig{{0}}});
  REQUIRE(got.size() == 1);
  CHECK(got[0] == KnobConfig{{10}});

  // Two points, one grid slot: the second drops.
  Eigen::MatrixXd both(2, 1);
  both << 0.1, 0.2;
  std::size_t dropped = 0;
  got = map_to_domain(both, grid, knobs, {KnobConfig{{10}}}, &dropped);
  CHECK(got.size() == 1);
  CHECK(dropped == 1);

  // Everything taken: throws.
  CHECK_THROWS_AS(map_to_domain(mid, grid, knobs, {KnobConfig{{0}}, KnobConfig{{10}}}), Error);
}

TEST_CASE("map_to_domain against a brute-force oracle") {
  std::vector<KnobDomain> knobs = {KnobDomain{"a", {0, 1, 2}}, KnobDomain{"b", {0, 1}}};
  auto grid = full_factorial(knobs);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd pt(1, 1 + 1);
    pt(0, 0) = u(rng);
    pt(0, 1) = u(rng);
    auto got = map_to_domain(pt, grid, knobs, {});
    REQUIRE(got.size() == 1);

    // Oracle: exhaustive nearest by hand-rolled normalization and squared
    // distance; grid order is lexicographic, first minimum kept.
    double best = std::numeric_limits<double>::infinity();
    KnobConfig winner;
    for (const auto& cfg : grid) {
      double dist = 0.0;
      for (std::size_t k = 0; k < knobs.size(); ++k) {
        const double lo = knobs[k].values.front(), hi = knobs[k].values.back();
        const double coord = (cfg.values[k] - lo) / (hi - lo);
        dist += (coord - pt(0, static_cast<Eigen::Index>(k))) *
                (coord - pt(0, static_cast<Eigen::Index>(k)));
      }
      if (dist < best) {
        best = dist;
        winner = cfg;
      }
    }
    CHECK(got[0] == winner);
  }
}

TEST_CASE("generate_design returns distinct unexplored configs") {
  auto d = two_knob_description();
  d.doe_params.n = 10;

  auto design = generate_design(d, {}, 5);
  REQUIRE(design.points.size() == 10);
  CHECK_FALSE(design.saturated);
  CHECK(design.repetitions == 1);
  std::set<KnobConfig> uniq(design.points.begin(), design.points.end());
  CHECK(uniq.size() == 10);
  for (const auto& p : design.points) CHECK(config_in_domain(d.knobs, p));

  // A second round never revisits the first.
  std::set<KnobConfig> explored(design.points.begin(), design.points.end());
  auto second = generate_design(d, explored, 6);
  for (const auto& p : second.points) CHECK(explored.count(p) == 0);

  // Determinism in the seed.
  auto replay = generate_design(d, {}, 5);
  CHECK(replay.points == design.points);
  CHECK(replay.det == design.det);
}

TEST_CASE("generate_design honors restrictions") {
  auto d = two_knob_description();
  d.doe_params.n = 8;
  d.doe_params.restriction = "a + b <= 4";
  auto r = Restriction::compile(d.doe_params.restriction, d.knobs);
  auto design = generate_design(d, {}, 11);
  REQUIRE(design.points.size() == 8);
  for (const auto& p : design.points) CHECK(r.evaluate(p));
}

TEST_CASE("generate_design saturates when the space runs out") {
  ApplicationDescription d;
  d.app_name = "tiny";
  d.knobs = {KnobDomain{"a", {0, 1}}, KnobDomain{"b", {0, 1}}};
  d.efps = {"t"};
  d.doe_params.n = 10;  // more than the 4 available

  auto design = generate_design(d, {}, 1);
  CHECK(design.saturated);
  CHECK(design.points.size() == 4);

  std::set<KnobConfig> explored(design.points.begin(), design.points.end());
  auto empty = generate_design(d, explored, 2);
  CHECK(empty.saturated);
  CHECK(empty.points.empty());

  // Partially explored: only the remainder comes back.
  auto rest = generate_design(d, {KnobConfig{{0, 0}}, KnobConfig{{0, 1}}}, 3);
  CHECK(rest.saturated);
  CHECK(rest.points.size() == 2);
  for (const auto& p : rest.points) CHECK(p.values[0] == 1);
}

TEST_CASE("generate_design carries the requested repetitions") {
  auto d = two_knob_description();
  d.doe_params.n = 4;
  d.doe_params.repetitions = 3;
  CHECK(generate_design(d, {}, 9).repetitions == 3);
}

TEST_CASE("designs spread out: min pairwise distance beats a random draw") {
  auto d = two_knob_description();
  d.doe_params.n = 12;
  auto design = generate_design(d, {}, 21);
  auto norm = normalize_configs(d.knobs, design.points);
  auto min_dist = [](const Eigen::MatrixXd& m) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = i + 1; j < m.rows(); ++j)
        best = std::min(best, (m.row(i) - m.row(j)).norm());
    return best;
  };
  const double ours = min_dist(norm);

  auto grid = full_factorial(d.knobs);
  std::mt19937_64 rng(77);
  double random_total = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    std::shuffle(grid.begin(), grid.end(), rng);
    std::vector<KnobConfig> pick(grid.begin(), grid.begin() + 12);
    random_total += min_dist(normalize_configs(d.knobs, pick));
  }
  CHECK(ours >= random_total / 30.0);
}

}  // TEST_SUITE
