/*
 * evaluate.cpp
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

#include "otto/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace otto {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> rows_of(const std::vector<std::vector<int>>& groups,
                         const std::vector<int>& group_ids) {
  std::vector<int> rows;
  for (int g : group_ids)
    rows.insert(rows.end(), groups[static_cast<std::size_t>(g)].begin(),
                groups[static_cast<std::size_t>(g)].end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

/// Per-group fold ids, round-robin over a seeded shuffle; all k folds are
/// non-empty when there are at least k groups.
std::vector<int> round_robin_folds(std::size_t n_groups, int k, std::uint64_t seed) {
  std::vector<std::size_t> order(n_groups);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(n_groups, 0);
  for (std::size_t i = 0; i < n_groups; ++i) fold[order[i]] = static_cast<int>(i % k);
  return fold;
}

/// Expands a per-group fold assignment to the rows of a dataset that was
/// built from those groups in order (group g's rows are contiguous there).
std::vector<int> expand_to_rows(const std::vector<std::vector<int>>& groups,
                                const std::vector<int>& group_fold) {
  std::vector<int> row_fold;
  for (std::size_t g = 0; g < groups.size(); ++g)
    row_fold.insert(row_fold.end(), groups[g].size(), group_fold[g]);
  return row_fold;
}

struct MetricPair {
  double r2 = 0.0;
  double mae = 0.0;
  bool zero_range = false;
};

MetricPair score(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  MetricPair m;
  m.r2 = signed_r2(observed, predicted);
  const MaeAdjResult mae = mae_adj(observed, predicted);
  m.mae = mae.value;
  m.zero_range = mae.zero_range;
  return m;
}

Eigen::VectorXd predict_rows(const Model& model, const Dataset& data,
                             const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        model.predict(data.predictors.row(rows[i]).transpose());
  return out;
}

Eigen::VectorXd targets_at(const Dataset& data, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = data.targets(rows[i]);
  return out;
}

/// The cross-validation material one rotation contributes to the ensemble
/// candidates: per base family either a CV set over the training part or the
/// reason it failed, plus the training dataset itself.
struct RotationCv {
  Dataset train;
  std::vector<int> holdout_rows;                   // rows of the full dataset
  std::vector<std::pair<std::string, CvModelSet>> sets;  // surviving families
  std::vector<std::pair<std::string, std::string>> failures;
};

RotationCv build_rotation_cv(const Dataset& data,
                             const std::vector<std::vector<int>>& groups,
                             const std::vector<int>& train_groups,
                             const std::vector<int>& holdout_rows, int k_folds,
                             std::uint64_t seed) {
  RotationCv rc;
  rc.holdout_rows = holdout_rows;

  std::vector<std::vector<int>> tg;
  tg.reserve(train_groups.size());
  for (int g : train_groups) tg.push_back(groups[static_cast<std::size_t>(g)]);
  std::vector<int> train_rows;
  for (const auto& g : tg) train_rows.insert(train_rows.end(), g.begin(), g.end());
  rc.train = data.subset(train_rows);

  const int k = std::min<int>(k_folds, static_cast<int>(tg.size()));
  if (k < 2) return rc;  // no CV material; every ensemble will fail

  const std::vector<int> group_fold = round_robin_folds(tg.size(), k, seed);
  const std::vector<int> row_fold = expand_to_rows(tg, group_fold);
  for (const auto& family : base_families()) {
    try {
      rc.sets.emplace_back(family, make_cv_set(family, rc.train, row_fold));
    } catch (const std::exception& e) {
      rc.failures.emplace_back(family, e.what());
    }
  }
  return rc;
}

const CvModelSet* find_set(const RotationCv& rc, const std::string& family) {
  for (const auto& [name, set] : rc.sets)
    if (name == family) return &set;
  return nullptr;
}

std::string find_failure(const RotationCv& rc, const std::string& family) {
  for (const auto& [name, why] : rc.failures)
    if (name == family) return why;
  return "no cross-validation material";
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kfold_rotating_holdout: return "kfold_rotating_holdout";
    case Regime::loo_with_holdout: return "loo_with_holdout";
    case Regime::pure_loo: return "pure_loo";
  }
  return "unknown";
}

Regime choose_regime(int n_distinct, int k, double v_f) {
  const double ratio = static_cast<double>(n_distinct - k) / static_cast<double>(n_distinct);
  if (n_distinct >= k && ratio >= v_f) return Regime::kfold_rotating_holdout;
  if (n_distinct >= k) return Regime::loo_with_holdout;
  return Regime::pure_loo;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> rotating_holdout_folds(
    int n, double v_f, std::uint64_t seed) {
  const int m = static_cast<int>(std::llround(static_cast<double>(n) * v_f));
  if (m <= 0) throw Error("rotating holdout: v_f too small, holdout size rounds to 0");
  const int l = n / m;
  if (l < 1) throw Error("rotating holdout: holdout larger than the data");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
  folds.reserve(static_cast<std::size_t>(l));
  for (int b = 0; b < l; ++b) {
    std::vector<int> holdout(order.begin() + static_cast<std::ptrdiff_t>(b) * m,
                             order.begin() + static_cast<std::ptrdiff_t>(b + 1) * m);
    std::vector<bool> held(static_cast<std::size_t>(n), false);
    for (int i : holdout) held[static_cast<std::size_t>(i)] = true;
    std::vector<int> train;
    train.reserve(static_cast<std::size_t>(n - m));
    for (int i = 0; i < n; ++i)
      if (!held[static_cast<std::size_t>(i)]) train.push_back(i);
    std::sort(holdout.begin(), holdout.end());
    folds.emplace_back(std::move(train), std::move(holdout));
  }
  return folds;
}

double signed_r2(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  if (observed.size() != predicted.size())
    throw Error("signed_r2: vector lengths differ");
  const Eigen::Index n = observed.size();
  if (n < 2) return 0.0;
  const double mo = observed.mean(), mp = predicted.mean();
  const Eigen::ArrayXd o = observed.array() - mo, p = predicted.array() - mp;
  const double so = std::sqrt(o.square().sum()), sp = std::sqrt(p.square().sum());
  if (!(so > 0.0) || !(sp > 0.0)) return 0.0;
  const double r = (o * p).sum() / (so * sp);
  return r * std::abs(r);
}

MaeAdjResult mae_adj(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
  if (observed.size() != predicted.size())
    throw Error("mae_adj: vector lengths differ");
  if (observed.size() == 0) throw Error("mae_adj: empty vectors");
  const double mae = (observed - predicted).array().abs().mean();
  const double range = observed.maxCoeff() - observed.minCoeff();
  MaeAdjResult out;
  if (range > 0.0) {
    out.value = mae / range;
  } else {
    out.value = mae;
    out.zero_range = true;
  }
  return out;
}

ValidationReport evaluate_candidates(const Dataset& data, const LearnParams& params,
                                     std::uint64_t seed) {
  data.validate();
  const auto groups = data.distinct_config_groups();
  const int n_distinct = static_cast<int>(groups.size());
  if (n_distinct < 2) throw Error("evaluate: needs at least 2 distinct configurations");

  ValidationReport report;
  report.regime = choose_regime(n_distinct, params.k_folds, params.v_f);

  std::vector<std::string> candidates = base_families();
  if (report.regime != Regime::pure_loo) {
    for (const auto& f : base_families()) candidates.push_back("bagged_" + f);
    candidates.push_back("stacking");
  }

  auto add = [&](const std::string& family, const MetricPair& m) {
    CandidateScore s;
    s.family = family;
    s.signed_r2 = m.r2;
    s.mae_adj = m.mae;
    s.zero_range = m.zero_range;
    s.status = "ok";
    report.candidates.push_back(std::move(s));
  };
  auto add_failed = [&](const std::string& family, const std::string& why) {
    CandidateScore s;
    s.family = family;
    s.failed = true;
    s.status = "failed: " + why;
    report.candidates.push_back(std::move(s));
  };

  if (report.regime == Regime::kfold_rotating_holdout) {
    const auto folds = rotating_holdout_folds(n_distinct, params.v_f, seed);
    std::vector<RotationCv> rotations;
    rotations.reserve(folds.size());
    for (std::size_t r = 0; r < folds.size(); ++r)
      rotations.push_back(build_rotation_cv(data, groups, folds[r].first,
                                            rows_of(groups, folds[r].second),
                                            params.k_folds, mix_seed(seed, r)));

    for (const auto& family : candidates) {
      const bool is_bag = family.rfind("bagged_", 0) == 0;
      const bool is_stack = family == "stacking";
      try {
        if (!is_bag && !is_stack) {
          // Base family: refit on each rotation's training part, metric
          // averaged over the rotations' holdout blocks.
          double r2 = 0.0, mae = 0.0;
          bool zr = false;
          for (const auto& rc : rotations) {
            ModelPtr m = fit_family(family, rc.train);
            const MetricPair sc = score(targets_at(data, rc.holdout_rows),
                                        predict_rows(*m, data, rc.holdout_rows));
            r2 += sc.r2;
            mae += sc.mae;
            zr = zr || sc.zero_range;
          }
          add(family, {r2 / static_cast<double>(rotations.size()),
                       mae / static_cast<double>(rotations.size()), zr});
        } else {
          // Ensemble: one prediction set pooled over every rotation's holdout.
          std::vector<double> obs, pred;
          for (const auto& rc : rotations) {
            ModelPtr m;
            if (is_bag) {
              const std::string base = family.substr(7);
              const CvModelSet* cv = find_set(rc, base);
              if (!cv) throw Error(base + ": " + find_failure(rc, base));
              m = bag(*cv);
            } else {
              if (rc.sets.empty())
                throw Error("no base family fit in a rotation");
              std::vector<CvModelSet> sets;
              std::vector<std::pair<std::string, ModelPtr>> fulls;
              for (const auto& [name, set] : rc.sets) {
                sets.push_back(set);
                fulls.emplace_back(name, fit_family(name, rc.train));
              }
              const auto w = solve_stack_weights(stacking_matrix(sets), rc.train.targets);
              m = stack(fulls, w.weights);
            }
            const Eigen::VectorXd o = targets_at(data, rc.holdout_rows);
            const Eigen::VectorXd p = predict_rows(*m, data, rc.holdout_rows);
            obs.insert(obs.end(), o.begin(), o.end());
            pred.insert(pred.end(), p.begin(), p.end());
          }
          add(family, score(Eigen::Map<Eigen::VectorXd>(obs.data(),
                                                        static_cast<Eigen::Index>(obs.size())),
                            Eigen::Map<Eigen::VectorXd>(
                                pred.data(), static_cast<Eigen::Index>(pred.size()))));
        }
      } catch (const std::exception& e) {
        add_failed(family, e.what());
      }
    }
  } else if (report.regime == Regime::loo_with_holdout) {
    // The first k distinct configs of the seed-shuffled order train the
    // models (leave-one-out CV for the ensembles); the rest is a holdout
    // every candidate is scored on.
    std::vector<int> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<int> train_groups(order.begin(), order.begin() + params.k_folds);
    const std::vector<int> holdout_rows =
        rows_of(groups, std::vector<int>(order.begin() + params.k_folds, order.end()));

    std::vector<std::vector<int>> tg;
    for (int g : train_groups) tg.push_back(groups[static_cast<std::size_t>(g)]);
    std::vector<int> train_rows;
    for (const auto& g : tg) train_rows.insert(train_rows.end(), g.begin(), g.end());
    const Dataset train = data.subset(train_rows);

    std::vector<int> loo_fold(tg.size());
    std::iota(loo_fold.begin(), loo_fold.end(), 0);
    const std::vector<int> row_fold = expand_to_rows(tg, loo_fold);

    std::vector<std::pair<std::string, CvModelSet>> sets;
    std::vector<std::pair<std::string, std::string>> failures;
    for (const auto& family : base_families()) {
      try {
        sets.emplace_back(family, make_cv_set(family, train, row_fold));
      } catch (const std::exception& e) {
        failures.emplace_back(family, e.what());
      }
    }
    const Eigen::VectorXd holdout_y = targets_at(data, holdout_rows);

    for (const auto& family : candidates) {
      const bool is_bag = family.rfind("bagged_", 0) == 0;
      const bool is_stack = family == "stacking";
      try {
        ModelPtr m;
        if (is_stack) {
          if (sets.empty()) throw Error("no base family fit");
          std::vector<CvModelSet> cvs;
          std::vector<std::pair<std::string, ModelPtr>> fulls;
          for (const auto& [name, set] : sets) {
            cvs.push_back(set);
            fulls.emplace_back(name, fit_family(name, train));
          }
          const auto w = solve_stack_weights(stacking_matrix(cvs), train.targets);
          m = stack(fulls, w.weights);
        } else if (is_bag) {
          const std::string base = family.substr(7);
          const CvModelSet* cv = nullptr;
          for (const auto& [name, set] : sets)
            if (name == base) cv = &set;
          if (!cv) {
            for (const auto& [name, why] : failures)
              if (name == base) throw Error(base + ": " + why);
            throw Error(base + ": no cross-validation material");
          }
          m = bag(*cv);
        } else {
          m = fit_family(family, train);
        }
        add(family, score(holdout_y, predict_rows(*m, data, holdout_rows)));
      } catch (const std::exception& e) {
        add_failed(family, e.what());
      }
    }
  } else {
    // pure_loo: pooled leave-one-out predictions per base family; no
    // ensembles in this regime.
    for (const auto& family : candidates) {
      try {
        std::vector<double> obs, pred;
        for (std::size_t g = 0; g < groups.size(); ++g) {
          std::vector<int> train_rows;
          for (std::size_t h = 0; h < groups.size(); ++h)
            if (h != g) train_rows.insert(train_rows.end(), groups[h].begin(), groups[h].end());
          ModelPtr m = fit_family(family, data.subset(train_rows));
          const Eigen::VectorXd o = targets_at(data, groups[g]);
          const Eigen::VectorXd p = predict_rows(*m, data, groups[g]);
          obs.insert(obs.end(), o.begin(), o.end());
          pred.insert(pred.end(), p.begin(), p.end());
        }
        add(family, score(Eigen::Map<Eigen::VectorXd>(obs.data(),
                                                      static_cast<Eigen::Index>(obs.size())),
                          Eigen::Map<Eigen::VectorXd>(pred.data(),
                                                      static_cast<Eigen::Index>(pred.size()))));
      } catch (const std::exception& e) {
        add_failed(family, e.what());
      }
    }
  }
  return report;
}

ModelPtr fit_final(const std::string& candidate, const Dataset& data,
                   const LearnParams& params, std::uint64_t seed) {
  data.validate();
  const bool is_bag = candidate.rfind("bagged_", 0) == 0;
  const bool is_stack = candidate == "stacking";
  if (!is_bag && !is_stack) return fit_family(candidate, data);

  const auto groups = data.distinct_config_groups();
  const int k = std::min<int>(params.k_folds, static_cast<int>(groups.size()));
  if (k < 2) throw Error("fit_final: not enough distinct configurations for an ensemble");
  const std::vector<int> group_fold = round_robin_folds(groups.size(), k, seed);
  const std::vector<int> group_fold_rows = [&] {
    std::vector<int> row_fold(data.rows());
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (int r : groups[g]) row_fold[static_cast<std::size_t>(r)] = group_fold[g];
    return row_fold;
  }();

  if (is_bag) return bag(make_cv_set(candidate.substr(7), data, group_fold_rows));

  std::vector<CvModelSet> sets;
  std::vector<std::pair<std::string, ModelPtr>> fulls;
  for (const auto& family : base_families()) {
    try {
      CvModelSet cv = make_cv_set(family, data, group_fold_rows);
      fulls.emplace_back(family, fit_family(family, data));
      sets.push_back(std::move(cv));
    } catch (const std::exception&) {
      // excluded from the stack
    }
  }
  if (sets.empty()) throw Error("fit_final: no base family fit for stacking");
  const auto w = solve_stack_weights(stacking_matrix(sets), data.targets);
  return stack(fulls, w.weights);
}

SelectionOutcome select_model(const ValidationReport& report, const LearnParams& params,
                              int iteration, bool final_round) {
  (void)iteration;
  if (report.candidates.empty()) throw Error("select_model: empty report");

  SelectionOutcome out;
  const CandidateScore* best = nullptr;
  for (const auto& c : report.candidates) {
    if (c.failed) continue;
    if (!(c.signed_r2 > params.eps_r && c.mae_adj < params.eps_m)) continue;
    out.eligible.push_back(c.family);
    if (!best || c.mae_adj < best->mae_adj ||
        (c.mae_adj == best->mae_adj && c.signed_r2 > best->signed_r2))
      best = &c;
  }
  if (best) {
    out.chosen = best->family;
    return out;
  }
  if (final_round) {
    for (const auto& c : report.candidates) {
      if (c.failed) continue;
      if (!best || c.mae_adj < best->mae_adj ||
          (c.mae_adj == best->mae_adj && c.signed_r2 > best->signed_r2))
        best = &c;
    }
    if (best) {
      out.chosen = best->family;
      out.forced = true;
    }
  }
  return out;
}

}  // namespace otto
