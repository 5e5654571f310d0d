/*
 * mars.cpp
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

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "otto/model.hpp"

namespace otto {

namespace {

using Factor = SplineModel::Factor;
using Term = SplineModel::Term;

double eval_factor(double z, const Factor& f) {
  if (f.linear) return z;
  const double v = f.dir > 0 ? z - f.knot : f.knot - z;
  return v > 0 ? v : 0.0;
}

Eigen::VectorXd term_column(const Eigen::MatrixXd& Z, const std::vector<Factor>& factors) {
  Eigen::VectorXd col = Eigen::VectorXd::Ones(Z.rows());
  for (const auto& f : factors)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) col(i) *= eval_factor(Z(i, f.var), f);
  return col;
}

bool has_variation(const Eigen::VectorXd& col) {
  const double mu = col.mean();
  return (col.array() - mu).abs().maxCoeff() > 1e-12;
}

bool uses_var(const std::vector<Factor>& factors, int var) {
  for (const auto& f : factors)
    if (f.var == var) return true;
  return false;
}

}  // namespace

double SplineModel::predict(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(active_cols_.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z(i) = (x(active_cols_[static_cast<std::size_t>(i)]) - mean_(i)) / scale_(i);
  double y = 0.0;
  for (const auto& term : terms_) {
    double b = 1.0;
    for (const auto& f : term.factors) b *= eval_factor(z(f.var), f);
    y += term.weight * b;
  }
  return y;
}

/// Shared engine behind fit_mars and fit_polymars: greedy forward additions
/// of mirrored hinge pairs (plus, for the interaction variant on >= 2
/// predictors, linear entry terms and two-way linear products), then
/// backward pruning by generalized cross-validation.
class MarsEngine {
 public:
  MarsEngine(const Dataset& data, int max_interaction, bool linear_entry, std::string family)
      : max_interaction_(max_interaction), linear_entry_(linear_entry),
        family_(std::move(family)) {
    data.validate();
    if (data.rows() < 8) throw Error(family_ + ": needs at least 8 rows");
    model_ = std::make_shared<SplineModel>();
    model_->family_ = family_;

    const auto constant = data.constant_columns();
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (constant[j]) {
        model_->warnings_.push_back("constant column '" + data.column_names[j] + "' dropped");
        continue;
      }
      model_->active_cols_.push_back(static_cast<int>(j));
    }

    n_ = static_cast<Eigen::Index>(data.rows());
    const Eigen::Index m = static_cast<Eigen::Index>(model_->active_cols_.size());
    Z_.resize(n_, m);
    model_->mean_.resize(m);
    model_->scale_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto col = data.predictors.col(model_->active_cols_[static_cast<std::size_t>(i)]);
      const double mu = col.mean();
      double sd = std::sqrt((col.array() - mu).square().sum() / static_cast<double>(n_));
      if (!(sd > 0)) sd = 1.0;
      model_->mean_(i) = mu;
      model_->scale_(i) = sd;
      Z_.col(i) = (col.array() - mu) / sd;
    }
    y_ = data.targets;
    yty_ = y_.squaredNorm();

    // Candidate knots: distinct values per variable, quantile-thinned to 16.
    knots_.resize(static_cast<std::size_t>(m));
    for (Eigen::Index v = 0; v < m; ++v) {
      std::vector<double> vals(Z_.col(v).data(), Z_.col(v).data() + n_);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      auto& ks = knots_[static_cast<std::size_t>(v)];
      if (vals.size() <= 16) {
        ks = vals;
      } else {
        for (int q = 0; q < 16; ++q) {
          const auto idx = static_cast<std::size_t>(
              std::llround(q * (static_cast<double>(vals.size()) - 1) / 15.0));
          ks.push_back(vals[idx]);
        }
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
      }
    }
  }

  ModelPtr fit() {
    const Eigen::Index m = Z_.cols();
    terms_.push_back(Term{});  // intercept
    cols_.push_back(Eigen::VectorXd::Ones(n_));
    rebuild_gram();

    // Non-intercept forward terms: enough room for the hinge pairs plus, on
    // the interaction variant, the linear products, bounded by half the data.
    const int budget =
        std::min<int>(std::min<int>(21, static_cast<int>(n_) / 2),
                      std::max(2 * static_cast<int>(m) + 1, 3 * static_cast<int>(m)));
    if (m > 0) forward_pass(budget);
    backward_pass();
    finalize();
    return model_;
  }

 private:
  // RSS of the current basis plus up to two extra columns, from the
  // incrementally maintained normal equations (tiny ridge for the search).
  double rss_with(const std::vector<const Eigen::VectorXd*>& extra) const {
    const Eigen::Index M = static_cast<Eigen::Index>(cols_.size());
    const Eigen::Index K = M + static_cast<Eigen::Index>(extra.size());
    Eigen::MatrixXd G(K, K);
    Eigen::VectorXd b(K);
    G.topLeftCorner(M, M) = gram_;
    b.head(M) = xty_;
    for (Eigen::Index e = 0; e < static_cast<Eigen::Index>(extra.size()); ++e) {
      const Eigen::VectorXd& c = *extra[static_cast<std::size_t>(e)];
      for (Eigen::Index i = 0; i < M; ++i) G(i, M + e) = G(M + e, i) = cols_[static_cast<std::size_t>(i)].dot(c);
      for (Eigen::Index f = 0; f <= e; ++f)
        G(M + f, M + e) = G(M + e, M + f) = extra[static_cast<std::size_t>(f)]->dot(c);
      b(M + e) = c.dot(y_);
    }
    Eigen::MatrixXd Gr = G;
    Gr.diagonal().array() += 1e-10 * (G.trace() / static_cast<double>(K) + 1.0);
    const Eigen::VectorXd beta = Gr.ldlt().solve(b);
    return std::max(0.0, yty_ - 2.0 * beta.dot(b) + beta.dot(G * beta));
  }

  void rebuild_gram() {
    const Eigen::Index M = static_cast<Eigen::Index>(cols_.size());
    gram_.resize(M, M);
    xty_.resize(M);
    for (Eigen::Index i = 0; i < M; ++i) {
      xty_(i) = cols_[static_cast<std::size_t>(i)].dot(y_);
      for (Eigen::Index j = 0; j <= i; ++j)
        gram_(i, j) = gram_(j, i) =
            cols_[static_cast<std::size_t>(i)].dot(cols_[static_cast<std::size_t>(j)]);
    }
  }

  void add_terms(const std::vector<Term>& ts, const std::vector<Eigen::VectorXd>& tcols) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      terms_.push_back(ts[i]);
      cols_.push_back(tcols[i]);
    }
    rebuild_gram();
  }

  void forward_pass(int budget) {
    const Eigen::Index m = Z_.cols();
    double current_rss = rss_with({});
    const double stop_tol = std::max(yty_, 1.0) * 1e-12;

    while (static_cast<int>(terms_.size()) - 1 < budget) {
      double best_rss = current_rss;
      double best_score = 0.0;  // RSS improvement per added column
      std::vector<Term> best_add;
      std::vector<Eigen::VectorXd> best_cols;

      auto consider = [&](std::vector<Term> add) {
        std::vector<Eigen::VectorXd> tcols;
        for (const auto& t : add) {
          Eigen::VectorXd c = term_column(Z_, t.factors);
          if (!has_variation(c)) return;
          tcols.push_back(std::move(c));
        }
        if (static_cast<int>(terms_.size()) - 1 + static_cast<int>(add.size()) > budget) return;
        std::vector<const Eigen::VectorXd*> ptrs;
        for (const auto& c : tcols) ptrs.push_back(&c);
        const double rss = rss_with(ptrs);
        // Normalizing by column count keeps one-column candidates (linear
        // entries, products) competitive against two-column hinge pairs.
        const double score = (current_rss - rss) / static_cast<double>(add.size());
        if (score > best_score + 1e-12) {
          best_score = score;
          best_rss = rss;
          best_add = std::move(add);
          best_cols = std::move(tcols);
        }
      };

      // Mirrored hinge pairs extending any term with room for another factor.
      for (const auto& parent : terms_) {
        if (static_cast<int>(parent.factors.size()) >= max_interaction_) continue;
        for (Eigen::Index v = 0; v < m; ++v) {
          if (uses_var(parent.factors, static_cast<int>(v))) continue;
          for (double knot : knots_[static_cast<std::size_t>(v)]) {
            Term plus = parent, minus = parent;
            plus.factors.push_back({static_cast<int>(v), knot, +1, false});
            minus.factors.push_back({static_cast<int>(v), knot, -1, false});
            consider({plus, minus});
          }
        }
      }
      // Linear entry terms and two-way linear products (interaction variant).
      if (linear_entry_ && m >= 2) {
        for (Eigen::Index v = 0; v < m; ++v) {
          Term lin;
          lin.factors.push_back({static_cast<int>(v), 0.0, +1, true});
          consider({lin});
        }
        if (max_interaction_ >= 2) {
          for (Eigen::Index v = 0; v < m; ++v) {
            for (Eigen::Index w = v + 1; w < m; ++w) {
              Term prod;
              prod.factors.push_back({static_cast<int>(v), 0.0, +1, true});
              prod.factors.push_back({static_cast<int>(w), 0.0, +1, true});
              consider({prod});
            }
          }
        }
      }

      if (best_add.empty() || current_rss - best_rss < stop_tol) break;
      add_terms(best_add, best_cols);
      current_rss = best_rss;
      if (current_rss < stop_tol) break;
    }
  }

  double gcv(double rss, std::size_t m_terms) const {
    // Effective parameters: one per basis function plus a smoothing charge
    // per knot-bearing term. The interaction variant pays a higher rate, but
    // only when interactions are actually possible (so 1-D fits are
    // identical across variants).
    const double c = (max_interaction_ >= 2 && Z_.cols() >= 2) ? 3.0 : 2.0;
    const double C = static_cast<double>(m_terms) + c * (static_cast<double>(m_terms) - 1.0) / 2.0;
    const double n = static_cast<double>(n_);
    if (C >= n) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - C / n;
    return rss / n / (denom * denom);
  }

  // RSS of an arbitrary subset of the currently held columns.
  double subset_rss(const std::vector<int>& keep) const {
    const Eigen::Index K = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd G(K, K);
    Eigen::VectorXd b(K);
    for (Eigen::Index i = 0; i < K; ++i) {
      b(i) = xty_(keep[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j <= i; ++j)
        G(i, j) = G(j, i) = gram_(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    Eigen::MatrixXd Gr = G;
    Gr.diagonal().array() += 1e-10 * (G.trace() / static_cast<double>(K) + 1.0);
    const Eigen::VectorXd beta = Gr.ldlt().solve(b);
    return std::max(0.0, yty_ - 2.0 * beta.dot(b) + beta.dot(G * beta));
  }

  void backward_pass() {
    std::vector<int> current(cols_.size());
    for (std::size_t i = 0; i < current.size(); ++i) current[i] = static_cast<int>(i);

    std::vector<int> best_subset = current;
    double best_gcv = gcv(subset_rss(current), current.size());

    while (current.size() > 1) {
      double step_best_rss = std::numeric_limits<double>::infinity();
      std::size_t drop = 0;
      for (std::size_t i = 0; i < current.size(); ++i) {
        if (current[i] == 0) continue;  // intercept stays
        std::vector<int> trial = current;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
        const double rss = subset_rss(trial);
        if (rss < step_best_rss) {
          step_best_rss = rss;
          drop = i;
        }
      }
      if (!std::isfinite(step_best_rss)) break;
      current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
      const double g = gcv(step_best_rss, current.size());
      if (g <= best_gcv) {
        best_gcv = g;
        best_subset = current;
      }
    }
    pruned_ = best_subset;
    model_->gcv_ = best_gcv;
  }

  void finalize() {
    // Stable refit of the surviving terms.
    Eigen::MatrixXd X(n_, static_cast<Eigen::Index>(pruned_.size()));
    for (std::size_t i = 0; i < pruned_.size(); ++i)
      X.col(static_cast<Eigen::Index>(i)) = cols_[static_cast<std::size_t>(pruned_[i])];
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y_);
    for (std::size_t i = 0; i < pruned_.size(); ++i) {
      Term t = terms_[static_cast<std::size_t>(pruned_[i])];
      t.weight = beta(static_cast<Eigen::Index>(i));
      model_->terms_.push_back(std::move(t));
    }
  }

  int max_interaction_;
  bool linear_entry_;
  std::string family_;
  std::shared_ptr<SplineModel> model_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd Z_;
  Eigen::VectorXd y_;
  double yty_ = 0.0;
  std::vector<std::vector<double>> knots_;
  std::vector<Term> terms_;             // aligned with cols_
  std::vector<Eigen::VectorXd> cols_;   // basis columns, [0] = intercept
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  std::vector<int> pruned_;
};

ModelPtr fit_mars(const Dataset& data, int max_interaction) {
  if (max_interaction < 1) throw Error("mars: max_interaction must be >= 1");
  return MarsEngine(data, max_interaction, false, "mars").fit();
}

ModelPtr fit_polymars(const Dataset& data) {
  // With a single usable predictor the interaction extras vanish and the
  // engine runs the exact additive candidate set.
  return MarsEngine(data, 2, true, "polymars").fit();
}

}  // namespace otto
