#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "otto/model.hpp"
#include "otto/types.hpp"

using namespace otto;

namespace {

ApplicationDescription demo_description() {
  ApplicationDescription d;
  d.app_name = "demo";
  d.knobs = {KnobDomain::range("a", 0, 9, 1), KnobDomain::range("b", 0, 9, 1)};
  d.efps = {"t", "q"};
  d.features = {"size"};
  d.cluster_params.method = ClusterMethod::kmeans;
  return d;
}

Observation make_obs(double a, double b, double size, double t, double q,
                     std::int64_t ts = 0, std::string client = "c") {
  Observation o;
  o.client_id = std::move(client);
  o.config = KnobConfig{{a, b}};
  o.features = FeatureVector{{size}};
  o.metrics = EfpVector{{t, q}};
  o.timestamp_ms = ts;
  return o;
}

/// Dataset over a 1-D grid with y = f(x); no features.
Dataset grid_dataset(const std::vector<double>& xs, double (*f)(double)) {
  Dataset d;
  d.n_knobs = 1;
  d.column_names = {"x"};
  d.predictors.resize(static_cast<Eigen::Index>(xs.size()), 1);
  d.targets.resize(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d.predictors(static_cast<Eigen::Index>(i), 0) = xs[i];
    d.targets(static_cast<Eigen::Index>(i)) = f(xs[i]);
  }
  return d;
}

Dataset grid2_dataset(int lo, int hi, double (*f)(double, double)) {
  Dataset d;
  d.n_knobs = 2;
  d.column_names = {"a", "b"};
  const int side = hi - lo + 1;
  d.predictors.resize(side * side, 2);
  d.targets.resize(side * side);
  Eigen::Index r = 0;
  for (int a = lo; a <= hi; ++a)
    for (int b = lo; b <= hi; ++b, ++r) {
      d.predictors(r, 0) = a;
      d.predictors(r, 1) = b;
      d.targets(r) = f(a, b);
    }
  return d;
}

double rmse(const Model& m, const Dataset& d) {
  double ss = 0;
  for (Eigen::Index i = 0; i < d.predictors.rows(); ++i) {
    const double e = m.predict(d.predictors.row(i).transpose()) - d.targets(i);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(d.predictors.rows()));
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("from_observations canonicalizes row order") {
  auto desc = demo_description();
  // Deliberately shuffled arrival order; canonical order sorts by config,
  // then features, timestamp, client.
  std::vector<Observation> obs = {
      make_obs(5, 1, 10, 1.5, 2.5, 30),
      make_obs(0, 2, 11, 0.5, 3.5, 20),
      make_obs(0, 2, 11, 0.6, 3.6, 10),
      make_obs(0, 1, 12, 0.7, 3.7, 40),
  };
  auto data = Dataset::from_observations(desc, obs, 0);
  REQUIRE(data.rows() == 4);
  REQUIRE(data.cols() == 3);
  CHECK(data.n_knobs == 2);
  CHECK(data.column_names == std::vector<std::string>{"a", "b", "size"});
  // Sorted: (0,1) then (0,2) ts=10 then (0,2) ts=20 then (5,1).
  CHECK(data.predictors(0, 1) == 1);
  CHECK(data.targets(0) == 0.7);
  CHECK(data.targets(1) == 0.6);
  CHECK(data.targets(2) == 0.5);
  CHECK(data.targets(3) == 1.5);
  CHECK(data.predictors(1, 2) == 11);  // feature column follows the knobs

  auto second = Dataset::from_observations(desc, obs, 1);
  CHECK(second.targets(3) == 2.5);

  CHECK_THROWS_AS(Dataset::from_observations(desc, {}, 0), Error);
  CHECK_THROWS_AS(Dataset::from_observations(desc, obs, 2), Error);
  auto bad = obs;
  bad[0].metrics.values.pop_back();
  CHECK_THROWS_AS(Dataset::from_observations(desc, bad, 0), Error);
}

TEST_CASE("distinct_config_groups partitions rows by knob values") {
  auto desc = demo_description();
  std::vector<Observation> obs = {
      make_obs(1, 1, 0, 10, 0, 1), make_obs(2, 2, 0, 20, 0, 2),
      make_obs(1, 1, 0, 11, 0, 3), make_obs(3, 3, 0, 30, 0, 4),
      make_obs(2, 2, 0, 21, 0, 5),
  };
  auto data = Dataset::from_observations(desc, obs, 0);
  auto groups = data.distinct_config_groups();
  REQUIRE(groups.size() == 3);
  std::size_t total = 0;
  for (const auto& g : groups) {
    total += g.size();
    for (std::size_t i = 1; i < g.size(); ++i) {
      CHECK(data.predictors(g[i], 0) == data.predictors(g[0], 0));
      CHECK(data.predictors(g[i], 1) == data.predictors(g[0], 1));
    }
  }
  CHECK(total == 5);
}

TEST_CASE("subset keeps the requested rows in order") {
  auto d = grid_dataset({0, 1, 2, 3, 4}, [](double x) { return 2 * x; });
  auto s = d.subset({4, 0, 2});
  REQUIRE(s.rows() == 3);
  CHECK(s.predictors(0, 0) == 4);
  CHECK(s.predictors(1, 0) == 0);
  CHECK(s.predictors(2, 0) == 2);
  CHECK(s.targets(1) == 0);
  CHECK(s.n_knobs == 1);
  CHECK(s.column_names == d.column_names);
}

TEST_CASE("constant_columns flags degenerate predictors") {
  Dataset d;
  d.n_knobs = 2;
  d.column_names = {"a", "b"};
  d.predictors.resize(3, 2);
  d.predictors << 1, 5, 2, 5, 3, 5;
  d.targets.resize(3);
  d.targets << 1, 2, 3;
  auto cc = d.constant_columns();
  REQUIRE(cc.size() == 2);
  CHECK_FALSE(cc[0]);
  CHECK(cc[1]);
}

TEST_CASE("validate rejects malformed datasets") {
  Dataset d;
  d.n_knobs = 1;
  d.column_names = {"x"};
  d.predictors.resize(2, 1);
  d.predictors << 1, 2;
  d.targets.resize(2);
  d.targets << 1, std::nan("");
  CHECK_THROWS_AS(d.validate(), Error);
  d.targets(1) = 2;
  CHECK_NOTHROW(d.validate());
  d.column_names = {"x", "y"};
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("first-order linear fit recovers an exact linear law") {
  // y = 3 + 2a - b on a small grid: OLS must recover it to rounding.
  auto d = grid2_dataset(0, 3, [](double a, double b) { return 3 + 2 * a - b; });
  auto m = fit_linear(d, false);
  CHECK(m->family() == "linear1");
  CHECK(rmse(*m, d) < 1e-9);

  Eigen::VectorXd probe(2);
  probe << 1.5, 2.5;  // off-grid
  CHECK(m->predict(probe) == doctest::Approx(3 + 2 * 1.5 - 2.5).epsilon(1e-9));

  auto lin = std::dynamic_pointer_cast<const LinearModel>(m);
  REQUIRE(lin);
  CHECK(lin->intercept() == doctest::Approx(3.0).epsilon(1e-9));
  REQUIRE(lin->coefficients().size() == 2);
  CHECK(lin->coefficients()[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(lin->coefficients()[1] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(lin->term_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("interaction linear fit captures a product term") {
  auto d = grid2_dataset(0, 3, [](double a, double b) { return 1 + a + 2 * b + 0.5 * a * b; });
  auto plain = fit_linear(d, false);
  auto crossed = fit_linear(d, true);
  CHECK(crossed->family() == "linear1x");
  CHECK(rmse(*crossed, d) < 1e-9);
  CHECK(rmse(*plain, d) > 0.1);  // the pure first-order model cannot

  Eigen::VectorXd probe(2);
  probe << 2.5, 1.5;
  CHECK(crossed->predict(probe) ==
        doctest::Approx(1 + 2.5 + 2 * 1.5 + 0.5 * 2.5 * 1.5).epsilon(1e-9));

  auto lin = std::dynamic_pointer_cast<const LinearModel>(crossed);
  REQUIRE(lin);
  CHECK(lin->term_names().size() == 3);  // a, b, a*b
}

TEST_CASE("hinge splines fit a kink exactly") {
  auto d = grid_dataset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                        [](double x) { return std::abs(x - 5.0); });
  auto m = fit_mars(d);
  CHECK(m->family() == "mars");
  CHECK(rmse(*m, d) < 1e-6);

  Eigen::VectorXd probe(1);
  probe << 3.5;
  CHECK(m->predict(probe) == doctest::Approx(1.5).epsilon(1e-4));

  auto spline = std::dynamic_pointer_cast<const SplineModel>(m);
  REQUIRE(spline);
  CHECK(spline->gcv() >= 0.0);
  CHECK_FALSE(spline->terms().empty());
}

TEST_CASE("hinge splines refuse too-small samples") {
  auto d = grid_dataset({0, 1, 2, 3, 4, 5, 6}, [](double x) { return x; });
  CHECK_THROWS_AS(fit_mars(d), Error);
  CHECK_THROWS_AS(fit_polymars(d), Error);
}

TEST_CASE("second-order splines match the first-order fit in one dimension") {
  auto d = grid_dataset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                        [](double x) { return x * x - 3 * x; });
  auto first = fit_mars(d);
  auto second = fit_polymars(d);
  CHECK(second->family() == "polymars");
  for (double x = 0; x <= 9; x += 0.25) {
    Eigen::VectorXd p(1);
    p << x;
    CHECK(second->predict(p) == first->predict(p));
  }
}

TEST_CASE("second-order splines capture an interaction surface") {
  auto d = grid2_dataset(0, 4, [](double a, double b) { return a * b; });
  auto first = fit_mars(d);
  auto second = fit_polymars(d);
  CHECK(rmse(*second, d) < 0.05);
  CHECK(rmse(*second, d) <= rmse(*first, d) + 1e-12);
}

TEST_CASE("kriging interpolates its training data") {
  auto d = grid_dataset({0, 1, 2, 3, 4, 5, 6, 7},
                        [](double x) { return std::sin(x) + 0.5 * x; });
  auto m = fit_kriging(d);
  CHECK(m->family() == "kriging");
  CHECK(rmse(*m, d) < 1e-3);

  // Between points the surrogate stays near the smooth truth.
  Eigen::VectorXd probe(1);
  probe << 3.5;
  CHECK(m->predict(probe) == doctest::Approx(std::sin(3.5) + 0.5 * 3.5).epsilon(0.2));
}

TEST_CASE("kriging averages duplicate configurations") {
  Dataset d;
  d.n_knobs = 1;
  d.column_names = {"x"};
  d.predictors.resize(6, 1);
  d.predictors << 0, 0, 1, 1, 2, 2;
  d.targets.resize(6);
  d.targets << 1.0, 3.0, 4.0, 6.0, 9.0, 11.0;  // pair means 2, 5, 10
  auto m = fit_kriging(d);
  Eigen::VectorXd p(1);
  p << 0;
  CHECK(m->predict(p) == doctest::Approx(2.0).epsilon(1e-2));
  p << 2;
  CHECK(m->predict(p) == doctest::Approx(10.0).epsilon(1e-2));
}

TEST_CASE("kriging needs three distinct configurations") {
  Dataset d;
  d.n_knobs = 1;
  d.column_names = {"x"};
  d.predictors.resize(4, 1);
  d.predictors << 0, 0, 1, 1;
  d.targets.resize(4);
  d.targets << 1, 1, 2, 2;
  CHECK_THROWS_AS(fit_kriging(d), Error);
}

TEST_CASE("family dispatch covers the published list") {
  CHECK(base_families() ==
        std::vector<std::string>{"linear1", "linear1x", "mars", "polymars", "kriging"});
  auto d = grid_dataset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9},
                        [](double x) { return 1 + 2 * x; });
  for (const auto& name : base_families()) {
    auto m = fit_family(name, d);
    REQUIRE(m);
    CHECK(m->family() == name);
  }
  CHECK_THROWS_AS(fit_family("forest", d), Error);
}

}  // TEST_SUITE
