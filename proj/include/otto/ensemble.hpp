/*
 * ensemble.hpp
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

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otto/model.hpp"

namespace otto {

/// One family's cross-validation models: fold f's model never saw the rows
/// with fold_assignment == f, and oof_predictions[i] comes from exactly that
/// model.
struct CvModelSet {
  std::string family;
  std::vector<ModelPtr> fold_models;
  std::vector<int> fold_assignment;   ///< per training row, 0..k-1
  Eigen::VectorXd oof_predictions;
};

/// Fits one model per fold (training on the complement) and fills the
/// out-of-fold predictions. fold_assignment must use every fold id 0..k-1.
/// Any fold's fit failure propagates (the family is then excluded upstream).
CvModelSet make_cv_set(const std::string& family, const Dataset& data,
                       const std::vector<int>& fold_assignment);

/// Bagging: predict(x) = arithmetic mean of the fold models' predictions.
/// Family tag "bagged_<base>". Requires >= 2 fold models.
ModelPtr bag(const CvModelSet& cv);

/// Column f, row i = out-of-fold prediction of family f for row i. All sets
/// must share one fold_assignment; mismatches throw.
Eigen::MatrixXd stacking_matrix(const std::vector<CvModelSet>& cv_sets);

struct StackingWeights {
  Eigen::VectorXd weights;  ///< >= 0, sums to 1 within 1e-9
  bool converged = true;    ///< false = uniform fallback was used
};

/// minimize ||P w - y||^2 over the simplex {w >= 0, sum w = 1}: projected
/// gradient from the uniform start, then an active-set polish, to a KKT
/// residual below 1e-8. Deterministic; on convergence failure returns
/// uniform weights with converged = false.
StackingWeights solve_stack_weights(const Eigen::MatrixXd& P, const Eigen::VectorXd& y);

/// predict(x) = sum_f w_f * model_f(x) over full-data refits of each family.
/// Family tag "stacking".
ModelPtr stack(const std::vector<std::pair<std::string, ModelPtr>>& full_models,
               const Eigen::VectorXd& weights);

}  // namespace otto
