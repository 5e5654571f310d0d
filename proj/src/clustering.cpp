/*
 * clustering.cpp
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

#include "otto/clustering.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace otto {

namespace {

using Point = std::vector<double>;

double sq_dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

/// Min-max normalization bounds per dimension; zero-range dimensions map to 0.
struct Bounds {
  Point lo, hi;
  Point normalize(const Point& p) const {
    Point out(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) {
      const double range = hi[d] - lo[d];
      out[d] = range > 0.0 ? (p[d] - lo[d]) / range : 0.0;
    }
    return out;
  }
};

Bounds bounds_of(const std::vector<Point>& points) {
  Bounds b;
  b.lo = points.front();
  b.hi = points.front();
  for (const auto& p : points)
    for (std::size_t d = 0; d < p.size(); ++d) {
      b.lo[d] = std::min(b.lo[d], p[d]);
      b.hi[d] = std::max(b.hi[d], p[d]);
    }
  return b;
}

Point denormalize(const Point& p, const Bounds& b) {
  Point out(p.size());
  for (std::size_t d = 0; d < p.size(); ++d) out[d] = b.lo[d] + p[d] * (b.hi[d] - b.lo[d]);
  return out;
}

struct KmeansRun {
  std::vector<Point> centroids;  // normalized space
  double wcss = std::numeric_limits<double>::infinity();
};

KmeansRun lloyd(const std::vector<Point>& pts, int k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  KmeansRun run;

  // k-means++ seeding.
  std::vector<Point> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.push_back(pts[first(rng)]);
  std::vector<double> d2(n);
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng), acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> assign(n, -1);
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(pts[i], centers[static_cast<std::size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
      wcss += bd;
    }
    assert(wcss <= prev + 1e-9 && "k-means objective must not increase");
    prev = wcss;
    if (!changed && iter > 0) break;

    std::vector<Point> sums(static_cast<std::size_t>(k),
                            Point(pts.front().size(), 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[static_cast<std::size_t>(assign[i])];
      for (std::size_t d = 0; d < s.size(); ++d) s[d] += pts[i][d];
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;  // keep its old spot
      auto& ctr = centers[static_cast<std::size_t>(c)];
      const auto& s = sums[static_cast<std::size_t>(c)];
      for (std::size_t d = 0; d < ctr.size(); ++d)
        ctr[d] = s[d] / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
  run.centroids = std::move(centers);
  run.wcss = prev;
  return run;
}

std::vector<FeatureVector> dbscan(const std::vector<Point>& raw, const Bounds& bounds,
                                  const ClusterParams& params,
                                  std::vector<std::string>* warnings) {
  const std::size_t n = raw.size();
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = bounds.normalize(raw[i]);

  const double eps2 = params.eps_dist * params.eps_dist;
  auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (sq_dist(pts[i], pts[j]) <= eps2) out.push_back(j);
    return out;
  };

  constexpr int kNoise = -1, kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    auto nb = neighbors(i);
    if (nb.size() < static_cast<std::size_t>(params.min_pts)) {
      label[i] = kNoise;
      continue;
    }
    const int cid = next_cluster++;
    label[i] = cid;
    std::vector<std::size_t> frontier(nb.begin(), nb.end());
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const std::size_t j = frontier[f];
      if (label[j] == kNoise) label[j] = cid;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = cid;
      auto nj = neighbors(j);
      if (nj.size() >= static_cast<std::size_t>(params.min_pts))
        frontier.insert(frontier.end(), nj.begin(), nj.end());
    }
  }

  std::vector<FeatureVector> centroids;
  for (int c = 0; c < next_cluster; ++c) {
    Point mean(raw.front().size(), 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (label[i] == c) {
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += raw[i][d];
        ++count;
      }
    for (double& v : mean) v /= static_cast<double>(count);
    centroids.push_back(FeatureVector{std::move(mean)});
  }
  if (centroids.empty()) {
    // every point was noise: fall back to a single global-mean centroid
    Point mean(raw.front().size(), 0.0);
    for (const auto& p : raw)
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += p[d];
    for (double& v : mean) v /= static_cast<double>(n);
    if (warnings)
      warnings->push_back("dbscan labeled every point as noise; using the global mean");
    centroids.push_back(FeatureVector{std::move(mean)});
  }
  return centroids;
}

}  // namespace

std::vector<FeatureVector> cluster_features(const std::vector<FeatureVector>& features,
                                            const ClusterParams& params, std::uint64_t seed,
                                            std::vector<std::string>* warnings) {
  if (params.method == ClusterMethod::none)
    return {FeatureVector{}};
  if (params.method == ClusterMethod::manual) {
    if (params.manual_centroids.empty()) throw Error("manual clustering: no centroids given");
    return params.manual_centroids;
  }
  if (features.empty()) throw Error("clustering: no feature vectors observed");
  const std::size_t dim = features.front().size();
  if (dim == 0) return {FeatureVector{}};
  for (const auto& f : features)
    if (f.size() != dim) throw Error("clustering: inconsistent feature dimensions");

  std::vector<Point> raw(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) raw[i] = features[i].values;
  const Bounds bounds = bounds_of(raw);

  if (params.method == ClusterMethod::dbscan)
    return dbscan(raw, bounds, params, warnings);

  // kmeans
  std::set<Point> distinct(raw.begin(), raw.end());
  int k = params.k;
  if (static_cast<std::size_t>(k) > distinct.size()) {
    k = static_cast<int>(distinct.size());
    if (warnings)
      warnings->push_back("kmeans: k reduced to " + std::to_string(k) +
                          " (number of distinct feature vectors)");
  }
  std::vector<Point> pts(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) pts[i] = bounds.normalize(raw[i]);

  std::mt19937_64 rng(seed);
  KmeansRun best;
  for (int restart = 0; restart < 20; ++restart) {
    KmeansRun run = lloyd(pts, k, rng);
    if (run.wcss < best.wcss) best = std::move(run);
  }

  std::vector<FeatureVector> out;
  out.reserve(best.centroids.size());
  for (const auto& c : best.centroids) out.push_back(FeatureVector{denormalize(c, bounds)});
  return out;
}

std::size_t nearest_centroid(const FeatureVector& f,
                             const std::vector<FeatureVector>& centroids) {
  if (centroids.empty()) throw Error("nearest_centroid: no centroids");
  const std::size_t dim = centroids.front().size();
  if (f.size() != dim) throw Error("nearest_centroid: feature dimension mismatch");
  if (dim == 0 || centroids.size() == 1) return 0;

  std::vector<Point> raw(centroids.size());
  for (std::size_t c = 0; c < centroids.size(); ++c) raw[c] = centroids[c].values;
  Bounds b = bounds_of(raw);
  const Point fn = b.normalize(f.values);
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(fn, b.normalize(raw[c]));
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

}  // namespace otto
