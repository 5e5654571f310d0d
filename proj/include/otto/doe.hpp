/*
 * doe.hpp
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
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otto/restriction.hpp"
#include "otto/types.hpp"

namespace otto {

/// Distance-thresholded correlation: correlation(h) = 1 - variogram(h) for
/// h <= epsilon, 0 beyond. The default variogram is the spherical one,
/// 1.5 t - 0.5 t^3 with t = h/epsilon, which is 0 at h=0 and 1 at h=epsilon,
/// so the correlation decays continuously from 1 to 0 over [0, epsilon].
struct CorrelationSpec {
  double epsilon = 0.2;
  std::function<double(double)> variogram;  ///< empty = spherical default

  static CorrelationSpec spherical(double epsilon);
  double gamma(double h) const;  ///< variogram value, clamped to [0,1]
};

/// One batch of configurations to explore.
struct Design {
  std::vector<KnobConfig> points;   ///< distinct, none in `explored`
  int repetitions = 1;              ///< evaluations requested per point
  bool saturated = false;           ///< fewer unexplored configs than requested
  std::size_t dropped = 0;          ///< continuous points with no mapping left
  double det = 1.0;                 ///< determinant of the selected correlation matrix
};

/// Cartesian product of the knob domains, lexicographic in knob order.
/// Throws a sizing error when the product exceeds `cap`.
std::vector<KnobConfig> full_factorial(const std::vector<KnobDomain>& knobs,
                                       std::size_t cap = 1000000);

/// Keeps exactly the configs satisfying the predicate, order preserved.
/// Throws "infeasible design space" when nothing survives.
std::vector<KnobConfig> apply_restrictions(const std::vector<KnobConfig>& grid,
                                           const Restriction& restriction);

/// 1 - gamma(h) for h <= epsilon, else 0. h is a Euclidean distance over
/// per-dimension min-max normalized knob values.
double correlation(double h, const CorrelationSpec& spec);

/// Maps each config onto [0,1]^d using the domain bounds of each knob
/// (a single-valued domain maps to coordinate 0). Rows = configs.
Eigen::MatrixXd normalize_configs(const std::vector<KnobDomain>& knobs,
                                  const std::vector<KnobConfig>& configs);

/// Correlation matrix of a point set (rows = points in [0,1]^d).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& points, const CorrelationSpec& spec);

/// Determinant of the correlation matrix of a point set.
double correlation_det(const Eigen::MatrixXd& points, const CorrelationSpec& spec);

/// Greedy point-exchange search for the n-subset of `candidates` (rows in
/// [0,1]^d) maximizing det of the correlation matrix. Seeded random starts
/// with `restarts` repetitions; deterministic given the seed. Returns row
/// indices into `candidates`. Throws on a persistently singular matrix.
std::vector<std::size_t> dmax_select(const Eigen::MatrixXd& candidates, int n,
                                     const CorrelationSpec& spec, std::uint64_t seed,
                                     int restarts = 10);

/// Snaps continuous points (rows in [0,1]^d) to the nearest not-yet-taken
/// config of `grid` (Euclidean in normalized space, ties to the lower
/// lexicographic config). Configs in `already_selected` are never produced;
/// points left with no remaining config are dropped and counted in
/// `dropped`. Throws an exhausted-space error when every point drops.
std::vector<KnobConfig> map_to_domain(const Eigen::MatrixXd& points,
                                      const std::vector<KnobConfig>& grid,
                                      const std::vector<KnobDomain>& knobs,
                                      const std::set<KnobConfig>& already_selected,
                                      std::size_t* dropped = nullptr);

/// Full pipeline: factorial grid, restriction filter, Dmax selection over
/// the unexplored configs, discrete mapping. Never returns a config in
/// `explored`. When fewer than doe_params.n unexplored configs remain, all
/// of them are returned and `saturated` is set (an empty Design when the
/// grid is exhausted).
Design generate_design(const ApplicationDescription& desc, const std::set<KnobConfig>& explored,
                       std::uint64_t seed);

}  // namespace otto
