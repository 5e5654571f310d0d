/*
 * kriging.cpp
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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Cholesky>

#include "otto/model.hpp"

namespace otto {

namespace {

class KrigingModel : public Model {
 public:
  double predict(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd z(static_cast<Eigen::Index>(active_cols_.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z(i) = (x(active_cols_[static_cast<std::size_t>(i)]) - mean_(i)) / scale_(i);
    // Linear trend plus the correlated residual interpolator.
    double y = beta_(0) + beta_.tail(z.size()).dot(z);
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      const double d2 = (X_.row(i).transpose() - z).squaredNorm();
      y += alpha_(i) * std::exp(-0.5 * d2 / (ell_ * ell_));
    }
    return y;
  }
  const std::string& family() const override { return family_; }

  std::string family_ = "kriging";
  std::vector<int> active_cols_;
  Eigen::VectorXd mean_, scale_;
  Eigen::MatrixXd X_;      // standardized training points (deduplicated)
  Eigen::VectorXd alpha_;  // R^{-1} (y - F beta)
  Eigen::VectorXd beta_;   // trend coefficients [1, z]
  double ell_ = 1.0;       // shared length scale in standardized space
  std::vector<std::string>& mutable_warnings() { return warnings_; }
};

}  // namespace

ModelPtr fit_kriging(const Dataset& data) {
  data.validate();

  // Collapse rows with identical predictors by averaging their targets.
  std::map<std::vector<double>, std::pair<double, int>> groups;
  for (Eigen::Index i = 0; i < data.predictors.rows(); ++i) {
    std::vector<double> key(data.predictors.row(i).begin(), data.predictors.row(i).end());
    auto& slot = groups[key];
    slot.first += data.targets(i);
    slot.second += 1;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(groups.size());
  if (n < 3) throw Error("kriging: needs at least 3 distinct predictor rows");

  Eigen::MatrixXd P(n, data.predictors.cols());
  Eigen::VectorXd y(n);
  {
    Eigen::Index i = 0;
    for (const auto& [key, acc] : groups) {
      for (std::size_t j = 0; j < key.size(); ++j) P(i, static_cast<Eigen::Index>(j)) = key[j];
      y(i) = acc.first / acc.second;
      ++i;
    }
  }

  auto model = std::make_shared<KrigingModel>();
  for (std::size_t j = 0; j < data.cols(); ++j) {
    const auto col = P.col(static_cast<Eigen::Index>(j));
    bool constant = true;
    for (Eigen::Index i = 1; i < n && constant; ++i) constant = col(i) == col(0);
    if (constant) {
      model->mutable_warnings().push_back("constant column '" + data.column_names[j] +
                                          "' dropped");
      continue;
    }
    model->active_cols_.push_back(static_cast<int>(j));
  }
  const Eigen::Index m = static_cast<Eigen::Index>(model->active_cols_.size());
  if (m == 0) throw Error("kriging: no varying predictor columns");

  Eigen::MatrixXd X(n, m);
  model->mean_.resize(m);
  model->scale_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto col = P.col(model->active_cols_[static_cast<std::size_t>(i)]);
    const double mu = col.mean();
    double sd = std::sqrt((col.array() - mu).square().sum() / static_cast<double>(n));
    if (!(sd > 0)) sd = 1.0;
    model->mean_(i) = mu;
    model->scale_(i) = sd;
    X.col(i) = (col.array() - mu) / sd;
  }

  Eigen::MatrixXd F(n, m + 1);
  F.col(0).setOnes();
  F.rightCols(m) = X;

  Eigen::MatrixXd D2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    D2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      D2(i, j) = D2(j, i) = (X.row(i) - X.row(j)).squaredNorm();
  }

  // Maximum likelihood over a log-spaced length-scale grid; the jitter
  // escalates only as far as each candidate needs.
  constexpr int kGrid = 15;
  const double lo = std::log(0.1), hi = std::log(10.0);
  double best_ll = -std::numeric_limits<double>::infinity();
  bool any = false;

  for (int g = 0; g < kGrid; ++g) {
    const double ell = std::exp(lo + (hi - lo) * g / (kGrid - 1));
    Eigen::MatrixXd K = (-0.5 * D2 / (ell * ell)).array().exp();

    for (double jitter = 1e-10; jitter <= 1e-2; jitter *= 100) {
      Eigen::MatrixXd R = K;
      R.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(R);
      if (llt.info() != Eigen::Success) continue;

      const Eigen::MatrixXd Ri_F = llt.solve(F);
      const Eigen::VectorXd Ri_y = llt.solve(y);
      const Eigen::MatrixXd FtRiF = F.transpose() * Ri_F;
      Eigen::LDLT<Eigen::MatrixXd> trend(FtRiF);
      if (trend.info() != Eigen::Success) break;
      const Eigen::VectorXd beta = trend.solve(F.transpose() * Ri_y);
      const Eigen::VectorXd e = y - F * beta;
      const Eigen::VectorXd Ri_e = llt.solve(e);
      const double sigma2 = std::max(e.dot(Ri_e) / static_cast<double>(n), 1e-300);
      const double log_det =
          2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      const double ll = -0.5 * (static_cast<double>(n) * std::log(sigma2) + log_det);

      if (ll > best_ll) {
        best_ll = ll;
        model->ell_ = ell;
        model->beta_ = beta;
        model->alpha_ = Ri_e;
        model->X_ = X;
      }
      any = true;
      break;  // this length scale is done; no further jitter needed
    }
  }

  if (!any)
    throw Error("kriging: covariance matrix not invertible at the maximum jitter");
  return model;
}

}  // namespace otto
