/*
 * clustering.hpp
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
#include <vector>

#include "otto/types.hpp"

namespace otto {

/// Produces the representative feature centroids (original units):
///   kmeans: Lloyd's algorithm with k-means++ seeding, 20 restarts, best
///           within-cluster sum of squares kept; k larger than the distinct
///           point count is reduced with a warning.
///   dbscan: density clusters on min-max normalized features, centroid =
///           member mean; noise points are attached to their nearest
///           centroid. All-noise input falls back to the global mean.
///   manual: the user-provided list verbatim.
///   none:   a single empty centroid (zero feature dimensions only).
/// Features are min-max normalized for all distance work; the k-means
/// objective is checked to be non-increasing across Lloyd iterations.
std::vector<FeatureVector> cluster_features(const std::vector<FeatureVector>& features,
                                            const ClusterParams& params, std::uint64_t seed,
                                            std::vector<std::string>* warnings = nullptr);

/// argmin Euclidean distance after per-dimension min-max normalization over
/// the centroid coordinates; ties resolve to the lowest index.
std::size_t nearest_centroid(const FeatureVector& f, const std::vector<FeatureVector>& centroids);

}  // namespace otto
