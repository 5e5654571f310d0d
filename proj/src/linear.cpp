/*
 * linear.cpp
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

#include <cmath>

#include <Eigen/SVD>

#include "otto/model.hpp"

namespace otto {

namespace {

// Standardized design matrix: [1, z_1..z_m] and, with interactions, all
// z_i * z_j for i < j.
Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& Z, bool interactions) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index m = Z.cols();
  Eigen::Index cols = 1 + m;
  if (interactions) cols += m * (m - 1) / 2;
  Eigen::MatrixXd phi(n, cols);
  phi.col(0).setOnes();
  phi.middleCols(1, m) = Z;
  if (interactions) {
    Eigen::Index c = 1 + m;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) phi.col(c++) = Z.col(i).cwiseProduct(Z.col(j));
  }
  return phi;
}

}  // namespace

double LinearModel::predict(const Eigen::VectorXd& x) const {
  const Eigen::Index m = static_cast<Eigen::Index>(active_cols_.size());
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i)
    z(i) = (x(active_cols_[static_cast<std::size_t>(i)]) - mean_(i)) / scale_(i);
  double y = beta_(0);
  for (Eigen::Index i = 0; i < m; ++i) y += beta_(1 + i) * z(i);
  if (interactions_) {
    Eigen::Index c = 1 + m;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) y += beta_(c++) * z(i) * z(j);
  }
  return y;
}

double LinearModel::intercept() const {
  const Eigen::Index m = static_cast<Eigen::Index>(active_cols_.size());
  double b0 = beta_(0);
  for (Eigen::Index i = 0; i < m; ++i) b0 -= beta_(1 + i) * mean_(i) / scale_(i);
  if (interactions_) {
    Eigen::Index c = 1 + m;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        b0 += beta_(c++) * mean_(i) * mean_(j) / (scale_(i) * scale_(j));
  }
  return b0;
}

std::vector<double> LinearModel::coefficients() const {
  // Expand the standardized form a0 + sum a_i z_i + sum b_ij z_i z_j with
  // z_i = (x_i - m_i)/s_i back into original-unit coefficients.
  const Eigen::Index m = static_cast<Eigen::Index>(active_cols_.size());
  std::vector<double> single(static_cast<std::size_t>(m), 0.0);
  std::vector<double> pair;
  for (Eigen::Index i = 0; i < m; ++i) single[static_cast<std::size_t>(i)] = beta_(1 + i) / scale_(i);
  if (interactions_) {
    Eigen::Index c = 1 + m;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double b = beta_(c++) / (scale_(i) * scale_(j));
        pair.push_back(b);
        single[static_cast<std::size_t>(i)] -= b * mean_(j);
        single[static_cast<std::size_t>(j)] -= b * mean_(i);
      }
    }
  }
  std::vector<double> out = single;
  out.insert(out.end(), pair.begin(), pair.end());
  return out;
}

std::vector<std::string> LinearModel::term_names() const {
  std::vector<std::string> out = names_;
  if (interactions_) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (std::size_t j = i + 1; j < names_.size(); ++j)
        out.push_back(names_[i] + "*" + names_[j]);
  }
  return out;
}

ModelPtr fit_linear(const Dataset& data, bool interactions) {
  data.validate();
  auto model = std::make_shared<LinearModel>();
  model->family_ = interactions ? "linear1x" : "linear1";
  model->interactions_ = interactions;

  const auto constant = data.constant_columns();
  for (std::size_t j = 0; j < data.cols(); ++j) {
    if (constant[j]) {
      model->warnings_.push_back("constant column '" + data.column_names[j] + "' dropped");
      continue;
    }
    model->active_cols_.push_back(static_cast<int>(j));
    model->names_.push_back(data.column_names[j]);
  }

  const Eigen::Index n = data.predictors.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(model->active_cols_.size());
  Eigen::MatrixXd Z(n, m);
  model->mean_.resize(m);
  model->scale_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto col = data.predictors.col(model->active_cols_[static_cast<std::size_t>(i)]);
    const double mu = col.mean();
    double sd = std::sqrt((col.array() - mu).square().sum() / static_cast<double>(n));
    if (!(sd > 0)) sd = 1.0;
    model->mean_(i) = mu;
    model->scale_(i) = sd;
    Z.col(i) = (col.array() - mu) / sd;
  }

  const Eigen::MatrixXd phi = design_matrix(Z, interactions);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  model->beta_ = svd.solve(data.targets);

  const auto& sv = svd.singularValues();
  if (sv.size() > 0 && sv(sv.size() - 1) > 0) {
    const double cond = sv(0) / sv(sv.size() - 1);
    if (cond > 1e8)
      model->warnings_.push_back("ill-conditioned design (condition number " +
                                 std::to_string(cond) + "); minimum-norm solution used");
  } else {
    model->warnings_.push_back("rank-deficient design; minimum-norm solution used");
  }
  return model;
}

}  // namespace otto
