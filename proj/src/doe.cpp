/*
 * doe.cpp
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

#include "otto/doe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "otto/log.hpp"

namespace otto {

CorrelationSpec CorrelationSpec::spherical(double epsilon) {
  CorrelationSpec spec;
  spec.epsilon = epsilon;
  return spec;  // empty variogram = spherical default
}

double CorrelationSpec::gamma(double h) const {
  if (h <= 0) return 0.0;
  if (variogram) return std::clamp(variogram(h), 0.0, 1.0);
  const double t = std::min(h / epsilon, 1.0);
  return 1.5 * t - 0.5 * t * t * t;
}

double correlation(double h, const CorrelationSpec& spec) {
  if (h < 0) throw Error("correlation: negative distance");
  if (h > spec.epsilon) return 0.0;
  return std::clamp(1.0 - spec.gamma(h), 0.0, 1.0);
}

std::vector<KnobConfig> full_factorial(const std::vector<KnobDomain>& knobs, std::size_t cap) {
  if (knobs.empty()) throw Error("full_factorial: no knobs");
  std::size_t total = 1;
  for (const auto& k : knobs) {
    if (k.values.empty()) throw Error("full_factorial: knob '" + k.name + "' has no values");
    if (total > cap / k.values.size())
      throw Error("full_factorial: design space exceeds the cap of " + std::to_string(cap) +
                  " configurations");
    total *= k.values.size();
  }
  std::vector<KnobConfig> grid;
  grid.reserve(total);
  std::vector<std::size_t> idx(knobs.size(), 0);
  for (;;) {
    KnobConfig c;
    c.values.reserve(knobs.size());
    for (std::size_t i = 0; i < knobs.size(); ++i) c.values.push_back(knobs[i].values[idx[i]]);
    grid.push_back(std::move(c));
    // Advance the rightmost index (lexicographic order over knob positions).
    std::size_t i = knobs.size();
    while (i > 0) {
      --i;
      if (++idx[i] < knobs[i].values.size()) break;
      idx[i] = 0;
      if (i == 0) return grid;
    }
  }
}

std::vector<KnobConfig> apply_restrictions(const std::vector<KnobConfig>& grid,
                                           const Restriction& restriction) {
  std::vector<KnobConfig> out;
  out.reserve(grid.size());
  for (const auto& c : grid)
    if (restriction.evaluate(c)) out.push_back(c);
  if (out.empty()) throw Error("infeasible design space: the restriction removed every config");
  return out;
}

Eigen::MatrixXd normalize_configs(const std::vector<KnobDomain>& knobs,
                                  const std::vector<KnobConfig>& configs) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(configs.size()),
                      static_cast<Eigen::Index>(knobs.size()));
  for (std::size_t j = 0; j < knobs.size(); ++j) {
    const double lo = knobs[j].values.front();
    const double hi = knobs[j].values.back();
    const double span = hi - lo;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      if (configs[i].values.size() != knobs.size())
        throw Error("normalize_configs: config arity mismatch");
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          span > 0 ? (configs[i].values[j] - lo) / span : 0.0;
    }
  }
  return pts;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& points, const CorrelationSpec& spec) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double h = (points.row(i) - points.row(j)).norm();
      R(i, j) = R(j, i) = correlation(h, spec);
    }
  }
  return R;
}

double correlation_det(const Eigen::MatrixXd& points, const CorrelationSpec& spec) {
  return correlation_matrix(points, spec).partialPivLu().determinant();
}

namespace {

// Correlations of candidate row c against the design rows listed in `rows`
// (excluding `skip`); returns false when every entry is zero.
bool fill_correlations(const Eigen::MatrixXd& pts, const std::vector<std::size_t>& rows,
                       std::size_t skip, std::size_t c, const CorrelationSpec& spec,
                       Eigen::VectorXd& r) {
  bool nonzero = false;
  Eigen::Index k = 0;
  for (std::size_t slot = 0; slot < rows.size(); ++slot) {
    if (slot == skip) continue;
    const double h = (pts.row(static_cast<Eigen::Index>(c)) -
                      pts.row(static_cast<Eigen::Index>(rows[slot])))
                         .norm();
    const double rho = correlation(h, spec);
    r(k++) = rho;
    if (rho != 0.0) nonzero = true;
  }
  return nonzero;
}

// Cholesky of the design-minus-one-slot correlation matrix, with escalating
// jitter. Returns the log-determinant through `log_det`; empty optional when
// even the maximum jitter fails.
std::optional<Eigen::LLT<Eigen::MatrixXd>> chol_without_slot(const Eigen::MatrixXd& pts,
                                                             const std::vector<std::size_t>& rows,
                                                             std::size_t skip,
                                                             const CorrelationSpec& spec,
                                                             double& log_det) {
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size()) - 1;
  Eigen::MatrixXd R(m, m);
  Eigen::Index a = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == skip) continue;
    Eigen::Index b = 0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j == skip) continue;
      if (a == b) {
        R(a, b) = 1.0;
      } else if (b < a) {
        R(a, b) = R(b, a);
      } else {
        const double h = (pts.row(static_cast<Eigen::Index>(rows[i])) -
                          pts.row(static_cast<Eigen::Index>(rows[j])))
                             .norm();
        R(a, b) = correlation(h, spec);
      }
      ++b;
    }
    ++a;
  }
  for (double jitter = 0.0; jitter <= 1e-6; jitter = jitter == 0.0 ? 1e-12 : jitter * 100) {
    Eigen::MatrixXd Rj = R;
    if (jitter > 0) Rj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Rj);
    if (llt.info() == Eigen::Success) {
      log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      return llt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::size_t> dmax_select(const Eigen::MatrixXd& candidates, int n,
                                     const CorrelationSpec& spec, std::uint64_t seed,
                                     int restarts) {
  const std::size_t total = static_cast<std::size_t>(candidates.rows());
  if (n < 2) throw Error("dmax_select: n must be at least 2");
  if (total < static_cast<std::size_t>(n))
    throw Error("dmax_select: fewer candidates than requested points");
  if (total == static_cast<std::size_t>(n)) {
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> best;
  double best_log_det = -std::numeric_limits<double>::infinity();
  int singular_failures = 0;

  for (int restart = 0; restart < restarts; ++restart) {
    // Seeded random start; redrawn when the subset is singular.
    std::vector<std::size_t> design;
    double design_log_det = 0.0;
    bool started = false;
    for (int attempt = 0; attempt < 8 && !started; ++attempt) {
      std::vector<std::size_t> pool(total);
      std::iota(pool.begin(), pool.end(), 0);
      std::shuffle(pool.begin(), pool.end(), rng);
      design.assign(pool.begin(), pool.begin() + n);
      std::sort(design.begin(), design.end());
      Eigen::MatrixXd pts(n, candidates.cols());
      for (int i = 0; i < n; ++i) pts.row(i) = candidates.row(static_cast<Eigen::Index>(design[i]));
      const Eigen::MatrixXd R = correlation_matrix(pts, spec);
      Eigen::LLT<Eigen::MatrixXd> llt(R);
      if (llt.info() == Eigen::Success) {
        design_log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        started = true;
      }
    }
    if (!started) {
      ++singular_failures;
      continue;
    }

    // Greedy single-point exchange until a full sweep makes no improvement.
    std::vector<char> in_design(total, 0);
    for (auto idx : design) in_design[idx] = 1;
    Eigen::VectorXd r(n - 1);
    bool improved = true;
    int sweeps = 0;
    while (improved && sweeps < 50) {
      improved = false;
      ++sweeps;
      for (std::size_t slot = 0; slot < design.size(); ++slot) {
        double base_log_det = 0.0;
        auto llt = chol_without_slot(candidates, design, slot, spec, base_log_det);
        if (!llt) continue;  // degenerate reduced design; try other slots
        // Gain of a point against the reduced design: the Schur complement
        // 1 - r^T R^{-1} r. The current occupant's gain is the baseline.
        auto gain_of = [&](std::size_t cand) {
          if (!fill_correlations(candidates, design, slot, cand, spec, r))
            return 1.0;  // uncorrelated with every design point
          const Eigen::VectorXd z = llt->matrixL().solve(r);
          return 1.0 - z.squaredNorm();
        };
        const double current_gain = gain_of(design[slot]);
        double best_gain = current_gain;
        std::size_t best_cand = design[slot];
        for (std::size_t cand = 0; cand < total; ++cand) {
          if (in_design[cand]) continue;
          const double g = gain_of(cand);
          if (g > best_gain + 1e-12) {
            best_gain = g;
            best_cand = cand;
          }
        }
        if (best_cand != design[slot] && best_gain > 0) {
          in_design[design[slot]] = 0;
          in_design[best_cand] = 1;
          design[slot] = best_cand;
          improved = true;
        }
      }
      // Keep the log-determinant current for the restart comparison.
      Eigen::MatrixXd pts(n, candidates.cols());
      for (int i = 0; i < n; ++i) pts.row(i) = candidates.row(static_cast<Eigen::Index>(design[i]));
      Eigen::LLT<Eigen::MatrixXd> llt(correlation_matrix(pts, spec));
      if (llt.info() == Eigen::Success)
        design_log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }

    if (design_log_det > best_log_det) {
      best_log_det = design_log_det;
      best = design;
    }
  }

  if (best.empty())
    throw Error("dmax_select: correlation matrix stayed singular over all restarts");
  std::sort(best.begin(), best.end());
  return best;
}

std::vector<KnobConfig> map_to_domain(const Eigen::MatrixXd& points,
                                      const std::vector<KnobConfig>& grid,
                                      const std::vector<KnobDomain>& knobs,
                                      const std::set<KnobConfig>& already_selected,
                                      std::size_t* dropped) {
  const Eigen::MatrixXd grid_pts = normalize_configs(knobs, grid);
  std::vector<char> taken(grid.size(), 0);
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (already_selected.count(grid[g])) taken[g] = 1;

  std::vector<KnobConfig> out;
  std::size_t dropped_count = 0;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    std::ptrdiff_t best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (taken[g]) continue;
      const double d = (grid_pts.row(static_cast<Eigen::Index>(g)) - points.row(p)).squaredNorm();
      // Strict < keeps the first (lexicographically lower, since the grid is
      // enumerated in lexicographic order) config on exact ties.
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best < 0) {
      ++dropped_count;
      continue;
    }
    taken[static_cast<std::size_t>(best)] = 1;
    out.push_back(grid[static_cast<std::size_t>(best)]);
  }
  if (dropped) *dropped = dropped_count;
  if (dropped_count > 0)
    log::warn("map_to_domain: dropped " + std::to_string(dropped_count) +
              " points with no remaining configuration");
  if (out.empty() && points.rows() > 0)
    throw Error("map_to_domain: design space exhausted, every point was dropped");
  return out;
}

Design generate_design(const ApplicationDescription& desc, const std::set<KnobConfig>& explored,
                       std::uint64_t seed) {
  const auto grid = full_factorial(desc.knobs);
  const auto restriction = Restriction::compile(desc.doe_params.restriction, desc.knobs);
  const auto restricted = apply_restrictions(grid, restriction);

  std::vector<KnobConfig> unexplored;
  unexplored.reserve(restricted.size());
  for (const auto& c : restricted)
    if (!explored.count(c)) unexplored.push_back(c);

  Design design;
  design.repetitions = desc.doe_params.repetitions;
  const std::size_t n = static_cast<std::size_t>(desc.doe_params.n);

  if (unexplored.size() <= n) {
    if (unexplored.size() < n)
      log::warn("generate_design: only " + std::to_string(unexplored.size()) +
                " unexplored configs remain (requested " + std::to_string(n) + ")");
    design.points = unexplored;
    design.saturated = true;
    if (!design.points.empty())
      design.det =
          correlation_det(normalize_configs(desc.knobs, design.points),
                          CorrelationSpec::spherical(desc.doe_params.epsilon));
    return design;
  }

  const CorrelationSpec spec = CorrelationSpec::spherical(desc.doe_params.epsilon);
  constexpr std::size_t kMaxCandidates = 10000;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);

  Eigen::MatrixXd candidates;
  bool candidates_are_grid = unexplored.size() <= kMaxCandidates;
  if (candidates_are_grid) {
    candidates = normalize_configs(desc.knobs, unexplored);
  } else {
    candidates.resize(static_cast<Eigen::Index>(kMaxCandidates),
                      static_cast<Eigen::Index>(desc.knobs.size()));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < candidates.rows(); ++i)
      for (Eigen::Index j = 0; j < candidates.cols(); ++j) candidates(i, j) = unit(rng);
  }

  const auto selected = dmax_select(candidates, static_cast<int>(n), spec, seed);
  Eigen::MatrixXd sel_pts(static_cast<Eigen::Index>(selected.size()), candidates.cols());
  for (std::size_t i = 0; i < selected.size(); ++i)
    sel_pts.row(static_cast<Eigen::Index>(i)) =
        candidates.row(static_cast<Eigen::Index>(selected[i]));

  design.points = map_to_domain(sel_pts, unexplored, desc.knobs, explored, &design.dropped);
  design.det = correlation_det(normalize_configs(desc.knobs, design.points), spec);
  return design;
}

}  // namespace otto
