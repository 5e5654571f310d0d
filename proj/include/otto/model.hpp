/*
 * model.hpp
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

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otto/types.hpp"

namespace otto {

/// Training data for one EFP: predictors are knob columns followed by
/// feature columns, one row per observation, canonically sorted so fits are
/// independent of arrival order.
struct Dataset {
  Eigen::MatrixXd predictors;  ///< n x p
  Eigen::VectorXd targets;     ///< n
  std::vector<std::string> column_names;
  std::size_t n_knobs = 0;     ///< leading predictor columns that are knobs

  std::size_t rows() const { return static_cast<std::size_t>(predictors.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(predictors.cols()); }

  /// Per-column constant flag (true = no variation).
  std::vector<bool> constant_columns() const;

  /// Throws on non-finite entries or shape mismatches.
  void validate() const;

  /// Row indices grouped by distinct knob configuration, groups ordered by
  /// the configuration's lexicographic order. Repetitions of one config land
  /// in the same group; validation folds operate on these groups.
  std::vector<std::vector<int>> distinct_config_groups() const;

  /// Builds the per-EFP dataset from observations (knobs then features as
  /// columns), rows sorted by (config, features, timestamp, client).
  static Dataset from_observations(const ApplicationDescription& desc,
                                   const std::vector<Observation>& observations,
                                   std::size_t efp_index);

  /// Row subset, preserving order.
  Dataset subset(const std::vector<int>& row_indices) const;
};

/// A fitted predictor. Immutable and safe to share across threads.
class Model {
 public:
  virtual ~Model() = default;
  virtual double predict(const Eigen::VectorXd& x) const = 0;
  virtual const std::string& family() const = 0;
  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Ordinary least squares over [1, x1..xp] plus, with `interactions`, all
/// pairwise products xi*xj (i<j). Minimum-norm solution on rank deficiency;
/// a condition-number warning is attached instead of failing. Family tag is
/// "linear1" or "linear1x".
ModelPtr fit_linear(const Dataset& data, bool interactions);

/// Adaptive-spline regression: greedy forward pass over mirrored hinge pairs
/// max(0, x-d) / max(0, d-x), then backward pruning by generalized
/// cross-validation. max_interaction bounds the factors per term (1 = purely
/// additive). Family tag "mars". Requires n >= 8.
ModelPtr fit_mars(const Dataset& data, int max_interaction = 1);

/// As fit_mars with two-way interactions and linear entry terms; on 1-D data
/// it degenerates to exactly the fit_mars candidate set. Family tag
/// "polymars". Requires n >= 8.
ModelPtr fit_polymars(const Dataset& data);

/// Universal Kriging with a linear trend and a squared-exponential kernel on
/// standardized predictors (one shared length scale there, i.e. per-dimension
/// scales in original units); rows with identical predictors are averaged
/// before fitting; the length scale is chosen by maximum likelihood over a
/// log-spaced grid with an escalating diagonal jitter. Throws Error when the
/// covariance stays non-invertible at the maximum jitter; requires >= 3
/// distinct rows. Family tag "kriging".
ModelPtr fit_kriging(const Dataset& data);

/// Base-family names in their canonical declaration order.
const std::vector<std::string>& base_families();

/// Dispatch by family name ("linear1", "linear1x", "mars", "polymars",
/// "kriging"). Throws on unknown names.
ModelPtr fit_family(const std::string& family, const Dataset& data);

/// Concrete access for linear fits (coefficients in original units).
class LinearModel : public Model {
 public:
  double predict(const Eigen::VectorXd& x) const override;
  const std::string& family() const override { return family_; }

  double intercept() const;
  /// Original-unit coefficient per term, aligned with term_names(): first the
  /// single columns, then (with interactions) products "a*b".
  std::vector<double> coefficients() const;
  std::vector<std::string> term_names() const;

 private:
  friend ModelPtr fit_linear(const Dataset&, bool);
  std::string family_;
  bool interactions_ = false;
  std::vector<int> active_cols_;          // surviving predictor columns
  std::vector<std::string> names_;        // per active column
  Eigen::VectorXd mean_, scale_;          // standardization per active column
  Eigen::VectorXd beta_;                  // [1, z, z_i z_j] coefficients
};

/// Concrete access for spline fits. Factors operate on standardized
/// (z-scored) predictor values; knots live in that space too.
class SplineModel : public Model {
 public:
  struct Factor {
    int var = 0;         // index into the model's active columns
    double knot = 0.0;   // unused for linear factors
    int dir = +1;        // +1: max(0, z-knot); -1: max(0, knot-z)
    bool linear = false; // factor is the bare standardized value
  };
  struct Term {
    std::vector<Factor> factors;  // empty = intercept
    double weight = 0.0;
  };

  double predict(const Eigen::VectorXd& x) const override;
  const std::string& family() const override { return family_; }
  const std::vector<Term>& terms() const { return terms_; }
  double gcv() const { return gcv_; }

 private:
  friend class MarsEngine;
  std::string family_;
  std::vector<int> active_cols_;
  Eigen::VectorXd mean_, scale_;  // standardization per active column
  std::vector<Term> terms_;
  double gcv_ = 0.0;
};

}  // namespace otto
