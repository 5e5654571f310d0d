#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "otto/ensemble.hpp"
#include "otto/model.hpp"
#include "otto/types.hpp"

using namespace otto;

namespace {

Dataset noisy_line(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Dataset d;
  d.n_knobs = 1;
  d.column_names = {"x"};
  d.predictors.resize(n, 1);
  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = i;
    d.predictors(i, 0) = x;
    d.targets(i) = 2.0 + 0.7 * x + noise(rng);
  }
  return d;
}

std::vector<int> round_robin(int rows, int k) {
  std::vector<int> f(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) f[static_cast<std::size_t>(i)] = i % k;
  return f;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("cv sets hold genuine out-of-fold predictions") {
  auto d = noisy_line(12, 1);
  auto folds = round_robin(12, 3);
  auto cv = make_cv_set("linear1", d, folds);
  CHECK(cv.family == "linear1");
  CHECK(cv.fold_models.size() == 3);
  CHECK(cv.fold_assignment == folds);
  REQUIRE(cv.oof_predictions.size() == 12);

  // Oracle: refit each fold's complement by hand and compare predictions.
  for (int f = 0; f < 3; ++f) {
    std::vector<int> train;
    for (int i = 0; i < 12; ++i)
      if (folds[static_cast<std::size_t>(i)] != f) train.push_back(i);
    auto manual = fit_linear(d.subset(train), false);
    for (int i = 0; i < 12; ++i)
      if (folds[static_cast<std::size_t>(i)] == f)
        CHECK(cv.oof_predictions(i) ==
              doctest::Approx(manual->predict(d.predictors.row(i).transpose())).epsilon(1e-12));
  }
}

TEST_CASE("cv set construction rejects malformed fold assignments") {
  auto d = noisy_line(6, 2);
  CHECK_THROWS_AS(make_cv_set("linear1", d, {0, 0, 0, 0, 0}), Error);      // size mismatch
  CHECK_THROWS_AS(make_cv_set("linear1", d, {0, 0, 0, 0, 0, 0}), Error);   // single fold
  CHECK_THROWS_AS(make_cv_set("linear1", d, {0, 0, 0, 2, 2, 2}), Error);   // fold 1 empty
  CHECK_THROWS_AS(make_cv_set("linear1", d, {0, 1, 0, 1, 0, -1}), Error);  // negative id
}

TEST_CASE("bagging is the plain mean of the fold models") {
  auto d = noisy_line(15, 3);
  auto cv = make_cv_set("linear1", d, round_robin(15, 5));
  auto bagged = bag(cv);
  CHECK(bagged->family() == "bagged_linear1");

  for (double x : {-1.0, 0.0, 3.7, 14.0, 20.0}) {
    Eigen::VectorXd p(1);
    p << x;
    double mean = 0;
    for (const auto& m : cv.fold_models) mean += m->predict(p);
    mean /= static_cast<double>(cv.fold_models.size());
    CHECK(bagged->predict(p) == doctest::Approx(mean).epsilon(1e-12));
  }

  CvModelSet crippled = cv;
  crippled.fold_models.resize(1);
  CHECK_THROWS_AS(bag(crippled), Error);
}

TEST_CASE("stacking matrix stacks aligned columns") {
  auto d = noisy_line(12, 4);
  auto folds = round_robin(12, 3);
  auto a = make_cv_set("linear1", d, folds);
  auto b = make_cv_set("linear1x", d, folds);
  auto P = stacking_matrix({a, b});
  REQUIRE(P.rows() == 12);
  REQUIRE(P.cols() == 2);
  CHECK(P.col(0) == a.oof_predictions);
  CHECK(P.col(1) == b.oof_predictions);

  auto other = make_cv_set("linear1", d, round_robin(12, 4));
  CHECK_THROWS_AS(stacking_matrix({a, other}), Error);
  CHECK_THROWS_AS(stacking_matrix({}), Error);
}

TEST_CASE("stack weights solve the simplex least squares problem") {
  // Known optimum: y is column 1 exactly, so the best simplex point is
  // w = (0, 1, 0).
  Eigen::MatrixXd P(4, 3);
  P << 1, 2, 0,
       2, 4, 1,
       3, 6, 0,
       4, 8, 1;
  Eigen::VectorXd y = P.col(1);
  auto sw = solve_stack_weights(P, y);
  CHECK(sw.converged);
  CHECK(sw.weights.size() == 3);
  CHECK(std::abs(sw.weights.sum() - 1.0) <= 1e-9);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(sw.weights(i) >= 0.0);
  CHECK((P * sw.weights - y).norm() <= 1e-6);
}

TEST_CASE("stack weights beat a grid search oracle") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd P(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    const double truth = std::sin(0.3 * i);
    P(i, 0) = truth + 0.4 * noise(rng);
    P(i, 1) = truth + 0.1 * noise(rng) + 0.3;
    y(i) = truth;
  }
  auto sw = solve_stack_weights(P, y);
  CHECK(sw.converged);
  CHECK(std::abs(sw.weights.sum() - 1.0) <= 1e-9);
  CHECK(sw.weights.minCoeff() >= 0.0);

  const double ours = (P * sw.weights - y).squaredNorm();
  // 1e-3 grid over the 2-simplex.
  double best_grid = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= 1000; ++t) {
    Eigen::VectorXd w(2);
    w << t / 1000.0, 1.0 - t / 1000.0;
    best_grid = std::min(best_grid, (P * w - y).squaredNorm());
  }
  CHECK(ours <= best_grid + 1e-6);

  // Never worse than either single model.
  CHECK(ours <= (P.col(0) - y).squaredNorm() + 1e-9);
  CHECK(ours <= (P.col(1) - y).squaredNorm() + 1e-9);
}

TEST_CASE("stack weights corner cases") {
  Eigen::MatrixXd single(3, 1);
  single << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  auto sw = solve_stack_weights(single, y);
  CHECK(sw.converged);
  CHECK(sw.weights.size() == 1);
  CHECK(sw.weights(0) == 1.0);

  Eigen::VectorXd wrong(2);
  CHECK_THROWS_AS(solve_stack_weights(single, wrong), Error);

  // Identical columns: any convex combination is optimal; the result must
  // still be a valid simplex point.
  Eigen::MatrixXd twin(3, 2);
  twin << 1, 1, 2, 2, 3, 3;
  auto tied = solve_stack_weights(twin, y);
  CHECK(std::abs(tied.weights.sum() - 1.0) <= 1e-9);
  CHECK(tied.weights.minCoeff() >= 0.0);
}

TEST_CASE("stacked model is the weighted sum of full refits") {
  auto d = noisy_line(12, 5);
  auto m1 = fit_linear(d, false);
  auto m2 = fit_linear(d, true);
  Eigen::VectorXd w(2);
  w << 0.25, 0.75;
  auto stacked = stack({{"linear1", m1}, {"linear1x", m2}}, w);
  CHECK(stacked->family() == "stacking");
  for (double x : {0.0, 5.5, 11.0}) {
    Eigen::VectorXd p(1);
    p << x;
    CHECK(stacked->predict(p) ==
          doctest::Approx(0.25 * m1->predict(p) + 0.75 * m2->predict(p)).epsilon(1e-12));
  }

  Eigen::VectorXd bad(3);
  CHECK_THROWS_AS(stack({{"linear1", m1}}, bad), Error);
  CHECK_THROWS_AS(stack({}, w), Error);
}

}  // TEST_SUITE
