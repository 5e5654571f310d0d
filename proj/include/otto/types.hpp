/*
 * types.hpp
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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace otto {

/// Base error type for hard failures. Validation problems are returned as
/// data (see validate_description), not thrown.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Discrete admissible values of one software-knob, strictly increasing.
struct KnobDomain {
  std::string name;
  std::vector<double> values;

  /// Convenience constructor for arithmetic ranges: lo, lo+step, ..., <= hi.
  static KnobDomain range(std::string name, double lo, double hi, double step);
};

/// One value per knob, position-aligned with the description's knob list.
struct KnobConfig {
  std::vector<double> values;

  bool operator==(const KnobConfig& other) const = default;
  /// Lexicographic order; used as the canonical tie-break everywhere.
  bool operator<(const KnobConfig& other) const { return values < other.values; }

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double& operator[](std::size_t i) { return values[i]; }
  const double& operator[](std::size_t i) const { return values[i]; }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
};

/// One value per declared input-feature name (may be empty).
struct FeatureVector {
  std::vector<double> values;

  bool operator==(const FeatureVector& other) const = default;
  bool operator<(const FeatureVector& other) const { return values < other.values; }

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double& operator[](std::size_t i) { return values[i]; }
  const double& operator[](std::size_t i) const { return values[i]; }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
};

/// One value per declared EFP name.
struct EfpVector {
  std::vector<double> values;

  bool operator==(const EfpVector& other) const = default;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  void resize(std::size_t n) { values.resize(n); }
  double& operator[](std::size_t i) { return values[i]; }
  const double& operator[](std::size_t i) const { return values[i]; }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }
};

/// One evaluated (knob-config, feature-vector, measured-EFPs) triple from one
/// client. Timestamps are client-local milliseconds; cross-client ordering is
/// never relied upon.
struct Observation {
  std::string client_id;
  KnobConfig config;
  FeatureVector features;
  EfpVector metrics;
  std::int64_t timestamp_ms = 0;

  bool operator==(const Observation& other) const = default;
};

/// Design-of-experiments parameters.
struct DoeParams {
  int n = 40;               ///< configurations to explore per round
  double epsilon = 0.2;     ///< correlation threshold distance
  int repetitions = 1;      ///< evaluations per configuration
  std::string restriction;  ///< infix predicate over knob names, empty = none
};

/// Learning-module parameters.
struct LearnParams {
  double eps_r = 0.5;         ///< minimum signed R-squared for eligibility
  double eps_m = 0.1;         ///< maximum adjusted MAE for eligibility
  int max_iterations = -1;    ///< DSE rounds; -1 = bounded only by the grid
  int k_folds = 5;            ///< cross-validation fold count
  double v_f = 0.2;           ///< validation-set ratio
  std::uint64_t rng_seed = 0;
};

enum class ClusterMethod { kmeans, dbscan, manual, none };

struct ClusterParams {
  ClusterMethod method = ClusterMethod::none;
  int k = 5;             ///< cluster count (kmeans)
  double eps_dist = 0.1; ///< neighborhood radius (dbscan)
  int min_pts = 4;       ///< density threshold (dbscan)
  std::vector<FeatureVector> manual_centroids;
};

const char* to_string(ClusterMethod m);
ClusterMethod cluster_method_from_string(const std::string& s);

/// Everything the server needs to know about an application: knobs with
/// their discrete domains, EFP names, input-feature names and the learning
/// parameters. Travels over the info_reply channel as JSON.
struct ApplicationDescription {
  std::string app_name;
  std::vector<KnobDomain> knobs;
  std::vector<std::string> efps;
  std::vector<std::string> features;
  DoeParams doe_params;
  LearnParams learn_params;
  ClusterParams cluster_params;

  std::string to_json() const;
  static ApplicationDescription from_json(const std::string& text);
};

/// Checks every description invariant and returns one human-readable line
/// per violation (empty vector = success). Violations are data, not errors.
std::vector<std::string> validate_description(const ApplicationDescription& desc);

/// The <config, expected EFPs, representative features> triple.
struct OperatingPoint {
  KnobConfig config;
  EfpVector expected;
  FeatureVector features;

  bool operator==(const OperatingPoint& other) const = default;
};

/// Which model family produced an EFP column of the knowledge, and how it
/// scored in validation.
struct ModelTag {
  std::string efp;
  std::string family;
  double signed_r2 = 0.0;
  double mae_adj = 0.0;
};

/// The full operating-point list broadcast to clients, plus the feature
/// centroids and per-EFP model provenance.
struct KnowledgeBase {
  std::vector<OperatingPoint> ops;
  std::vector<FeatureVector> centroids;
  std::vector<ModelTag> model_tags;
};

/// Index of the domain value nearest to v (ties to the lower value).
std::size_t nearest_value_index(const KnobDomain& domain, double v);

/// True iff every config value is exactly a member of its knob's domain.
/// Equivalent to nearest-value snapping with zero distance.
bool config_in_domain(const std::vector<KnobDomain>& knobs, const KnobConfig& config);

}  // namespace otto
