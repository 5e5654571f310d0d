/*
 * evaluate.hpp
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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otto/ensemble.hpp"
#include "otto/model.hpp"

namespace otto {

enum class Regime { kfold_rotating_holdout, loo_with_holdout, pure_loo };
const char* to_string(Regime r);

/// Regime routing on the count of distinct configurations:
///   (n-k)/n >= v_f            -> kfold_rotating_holdout
///   n >= k and (n-k)/n < v_f  -> loo_with_holdout
///   n < k                     -> pure_loo (no ensembles there)
Regime choose_regime(int n_distinct, int k, double v_f);

/// Rotating holdout split: m = round(n * v_f) held-out items per fold,
/// l = floor(n/m) disjoint contiguous blocks over a seed-shuffled order of
/// 0..n-1; each fold pairs one block (holdout) with its complement (train).
/// Throws when m rounds to 0.
std::vector<std::pair<std::vector<int>, std::vector<int>>> rotating_holdout_folds(
    int n, double v_f, std::uint64_t seed);

/// Sign-preserving squared Pearson correlation: sign(r) * r^2, and 0 when
/// either vector is constant (correlation undefined).
double signed_r2(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);

struct MaeAdjResult {
  double value = 0.0;      ///< MAE / observed range; raw MAE when zero_range
  bool zero_range = false;
};

/// Mean absolute error normalized by the observed range.
MaeAdjResult mae_adj(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);

struct CandidateScore {
  std::string family;        ///< base name, "bagged_<base>" or "stacking"
  double signed_r2 = 0.0;
  double mae_adj = 0.0;
  bool zero_range = false;
  bool failed = false;
  std::string status;        ///< "ok" or "failed: <reason>"
};

struct ValidationReport {
  std::string efp;
  Regime regime = Regime::pure_loo;
  std::vector<CandidateScore> candidates;  ///< declaration order
};

/// Scores every candidate family under the routed regime:
///  - kfold_rotating_holdout: base families are refit per rotation on the
///    training part and scored on the held-out block, metrics averaged over
///    rotations; ensembles are built by k-fold CV inside each rotation's
///    training part and scored on the pooled holdout predictions.
///  - loo_with_holdout: the first k distinct configs of the seed-shuffled
///    order form the training set (leave-one-out CV models for ensembles),
///    the rest is the holdout every candidate is scored on.
///  - pure_loo: pooled leave-one-out predictions, base families only.
/// Family fit failures are recorded per candidate, never fatal.
ValidationReport evaluate_candidates(const Dataset& data, const LearnParams& params,
                                     std::uint64_t seed);

/// Refits the chosen candidate on all data: base families directly,
/// "bagged_<f>" as the bag of a k-fold CV over all distinct configs,
/// "stacking" with weights solved on that CV's out-of-fold matrix.
ModelPtr fit_final(const std::string& candidate, const Dataset& data, const LearnParams& params,
                   std::uint64_t seed);

struct SelectionOutcome {
  std::string chosen;                 ///< empty = no eligible model, restart
  bool forced = false;                ///< final-round smallest-MAE pick
  std::vector<std::string> eligible;  ///< families passing both thresholds
};

/// Eligibility: signed_r2 > eps_r and mae_adj < eps_m. Chosen = eligible
/// argmin mae_adj (ties: higher signed_r2, then report order). With nothing
/// eligible the outcome is empty unless `final_round`, where the smallest
/// mae_adj among non-failed candidates is forced. Throws on an empty report.
SelectionOutcome select_model(const ValidationReport& report, const LearnParams& params,
                              int iteration, bool final_round);

}  // namespace otto
