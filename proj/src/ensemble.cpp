/*
 * ensemble.cpp
 *
 * This source file is part of the otto project.
 *
 * Copyright 2026 the otto authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "otto/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace otto {

namespace {

class BaggedModel : public Model {
 public:
  BaggedModel(std::string family, std::vector<ModelPtr> members)
      : family_(std::move(family)), members_(std::move(members)) {}

  double predict(const Eigen::VectorXd& x) const override {
    double sum = 0.0;
    for (const auto& m : members_) sum += m->predict(x);
    return sum / static_cast<double>(members_.size());
  }
  const std::string& family() const override { return family_; }

 private:
  std::string family_;
  std::vector<ModelPtr> members_;
};

class StackedModel : public Model {
 public:
  StackedModel(std::vector<ModelPtr> members, Eigen::VectorXd weights)
      : members_(std::move(members)), weights_(std::move(weights)) {}

  double predict(const Eigen::VectorXd& x) const override {
    double sum = 0.0;
    for (std::size_t f = 0; f < members_.size(); ++f)
      sum += weights_(static_cast<Eigen::Index>(f)) * members_[f]->predict(x);
    return sum;
  }
  const std::string& family() const override { return family_; }

 private:
  std::string family_ = "stacking";
  std::vector<ModelPtr> members_;
  Eigen::VectorXd weights_;
};

/// Euclidean projection onto the probability simplex (Held et al. style
/// sort-and-threshold), exact up to floating point.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    css += u[static_cast<std::size_t>(i)];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0) {
      rho = static_cast<int>(i + 1);
      tau = t;
    }
  }
  (void)rho;
  Eigen::VectorXd w = (v.array() - tau).max(0.0);
  // Normalize away the residual rounding drift.
  const double s = w.sum();
  if (s > 0) w /= s;
  return w;
}

/// KKT residual of min ||Pw-y||^2 on the simplex at w: with g = grad and
/// mu = mean of g over the support, active coordinates must have g == mu and
/// inactive ones g >= mu.
double kkt_residual(const Eigen::VectorXd& g, const Eigen::VectorXd& w) {
  double mu = 0.0;
  int support = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > 1e-12) {
      mu += g(i);
      ++support;
    }
  if (support == 0) return std::numeric_limits<double>::infinity();
  mu /= support;
  double r = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 1e-12)
      r = std::max(r, std::abs(g(i) - mu));
    else
      r = std::max(r, std::max(0.0, mu - g(i)));
  }
  return r;
}

}  // namespace

CvModelSet make_cv_set(const std::string& family, const Dataset& data,
                       const std::vector<int>& fold_assignment) {
  if (fold_assignment.size() != data.rows())
    throw Error("make_cv_set: fold assignment size does not match the data");
  int k = 0;
  for (int f : fold_assignment) {
    if (f < 0) throw Error("make_cv_set: negative fold id");
    k = std::max(k, f + 1);
  }
  if (k < 2) throw Error("make_cv_set: needs at least 2 folds");
  std::vector<std::size_t> fold_size(static_cast<std::size_t>(k), 0);
  for (int f : fold_assignment) ++fold_size[static_cast<std::size_t>(f)];
  for (int f = 0; f < k; ++f)
    if (fold_size[static_cast<std::size_t>(f)] == 0)
      throw Error("make_cv_set: fold " + std::to_string(f) + " is empty");

  CvModelSet cv;
  cv.family = family;
  cv.fold_assignment = fold_assignment;
  cv.oof_predictions.resize(static_cast<Eigen::Index>(data.rows()));

  for (int f = 0; f < k; ++f) {
    std::vector<int> train;
    train.reserve(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (fold_assignment[i] != f) train.push_back(static_cast<int>(i));
    ModelPtr model = fit_family(family, data.subset(train));
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (fold_assignment[i] == f)
        cv.oof_predictions(static_cast<Eigen::Index>(i)) =
            model->predict(data.predictors.row(static_cast<Eigen::Index>(i)).transpose());
    cv.fold_models.push_back(std::move(model));
  }
  return cv;
}

ModelPtr bag(const CvModelSet& cv) {
  if (cv.fold_models.size() < 2) throw Error("bag: needs at least 2 fold models");
  return std::make_shared<BaggedModel>("bagged_" + cv.family, cv.fold_models);
}

Eigen::MatrixXd stacking_matrix(const std::vector<CvModelSet>& cv_sets) {
  if (cv_sets.empty()) throw Error("stacking_matrix: no model sets");
  const auto& ref = cv_sets.front().fold_assignment;
  for (const auto& cv : cv_sets)
    if (cv.fold_assignment != ref)
      throw Error("stacking_matrix: fold assignments differ between families");
  Eigen::MatrixXd P(static_cast<Eigen::Index>(ref.size()),
                    static_cast<Eigen::Index>(cv_sets.size()));
  for (std::size_t f = 0; f < cv_sets.size(); ++f)
    P.col(static_cast<Eigen::Index>(f)) = cv_sets[f].oof_predictions;
  return P;
}

StackingWeights solve_stack_weights(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
  const Eigen::Index F = P.cols();
  if (F < 1) throw Error("solve_stack_weights: no columns");
  if (P.rows() != y.size()) throw Error("solve_stack_weights: shape mismatch");

  StackingWeights out;
  if (F == 1) {
    out.weights = Eigen::VectorXd::Ones(1);
    out.converged = true;
    return out;
  }

  const Eigen::MatrixXd Q = P.transpose() * P;
  const Eigen::VectorXd c = P.transpose() * y;
  auto grad = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return 2.0 * (Q * w - c);
  };

  // Lipschitz bound for the gradient; the trace dominates the spectral norm.
  const double L = std::max(2.0 * Q.trace(), 1e-12);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(F, 1.0 / static_cast<double>(F));

  constexpr double kTol = 1e-8;
  bool converged = false;
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd g = grad(w);
    if (kkt_residual(g, w) < kTol) {
      converged = true;
      break;
    }
    w = project_simplex(w - g / L);
  }

  // Active-set polish: solve the equality-constrained problem on the current
  // support; keep the result only when it is feasible and not worse.
  {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < F; ++i)
      if (w(i) > 1e-12) support.push_back(i);
    if (!support.empty()) {
      const Eigen::Index s = static_cast<Eigen::Index>(support.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = 2.0 * Q(support[a], support[b]);
        kkt(a, s) = 1.0;
        kkt(s, a) = 1.0;
        rhs(a) = 2.0 * c(support[a]);
      }
      rhs(s) = 1.0;
      const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(F);
      bool feasible = sol.allFinite();
      for (Eigen::Index a = 0; a < s && feasible; ++a) {
        if (sol(a) < -1e-12) feasible = false;
        cand(support[a]) = std::max(0.0, sol(a));
      }
      if (feasible && std::abs(cand.sum() - 1.0) < 1e-9) {
        const double before = (P * w - y).squaredNorm();
        const double after = (P * cand - y).squaredNorm();
        if (after <= before + 1e-12) {
          w = cand;
          if (kkt_residual(grad(w), w) < kTol) converged = true;
        }
      }
    }
  }

  if (!converged && kkt_residual(grad(w), w) >= kTol) {
    out.weights = Eigen::VectorXd::Constant(F, 1.0 / static_cast<double>(F));
    out.converged = false;
    return out;
  }
  w = w.cwiseMax(0.0);
  const double total = w.sum();
  if (total > 0) w /= total;
  out.weights = w;
  out.converged = true;
  return out;
}

ModelPtr stack(const std::vector<std::pair<std::string, ModelPtr>>& full_models,
               const Eigen::VectorXd& weights) {
  if (full_models.empty()) throw Error("stack: no models");
  if (weights.size() != static_cast<Eigen::Index>(full_models.size()))
    throw Error("stack: weight count does not match the model count");
  std::vector<ModelPtr> members;
  members.reserve(full_models.size());
  for (const auto& [name, m] : full_models) members.push_back(m);
  return std::make_shared<StackedModel>(std::move(members), weights);
}

}  // namespace otto
