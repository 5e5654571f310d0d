/*
 * types.cpp
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

#include "otto/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "otto/restriction.hpp"

namespace otto {

using nlohmann::json;

KnobDomain KnobDomain::range(std::string name, double lo, double hi, double step) {
  if (step <= 0) throw Error("KnobDomain::range: step must be > 0");
  KnobDomain d;
  d.name = std::move(name);
  for (long i = 0;; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    if (v > hi + 1e-12 * std::max(1.0, std::abs(hi))) break;
    d.values.push_back(v);
  }
  return d;
}

const char* to_string(ClusterMethod m) {
  switch (m) {
    case ClusterMethod::kmeans: return "kmeans";
    case ClusterMethod::dbscan: return "dbscan";
    case ClusterMethod::manual: return "manual";
    case ClusterMethod::none: return "none";
  }
  return "none";
}

ClusterMethod cluster_method_from_string(const std::string& s) {
  if (s == "kmeans") return ClusterMethod::kmeans;
  if (s == "dbscan") return ClusterMethod::dbscan;
  if (s == "manual") return ClusterMethod::manual;
  if (s == "none") return ClusterMethod::none;
  throw Error("unknown cluster method '" + s + "'");
}

namespace {

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  return s.find(',') == std::string::npos && s.find('\n') == std::string::npos &&
         s.find('\r') == std::string::npos && s.find('/') == std::string::npos;
}

void check_unique(const std::vector<std::string>& names, const std::string& what,
                  std::vector<std::string>& out) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) out.push_back(what + ": duplicate " + what + " name '" + n + "'");
  }
}

}  // namespace

std::vector<std::string> validate_description(const ApplicationDescription& desc) {
  std::vector<std::string> v;
  if (desc.app_name.empty()) v.push_back("app_name: must be non-empty");
  if (!desc.app_name.empty() && !valid_identifier(desc.app_name))
    v.push_back("app_name: contains a reserved character (',', '/' or newline)");

  std::vector<std::string> knob_names;
  for (std::size_t i = 0; i < desc.knobs.size(); ++i) {
    const auto& k = desc.knobs[i];
    const std::string path = "knobs[" + std::to_string(i) + "]";
    knob_names.push_back(k.name);
    if (!valid_identifier(k.name)) v.push_back(path + ".name: invalid identifier '" + k.name + "'");
    if (k.values.empty()) v.push_back(path + ".values: must be non-empty");
    for (std::size_t j = 0; j < k.values.size(); ++j) {
      if (!std::isfinite(k.values[j])) {
        v.push_back(path + ".values[" + std::to_string(j) + "]: must be finite");
        break;
      }
    }
    for (std::size_t j = 1; j < k.values.size(); ++j) {
      if (!(k.values[j] > k.values[j - 1])) {
        v.push_back(path + ".values: must be strictly increasing");
        break;
      }
    }
  }
  if (desc.knobs.empty()) v.push_back("knobs: at least one knob is required");
  check_unique(knob_names, "knob", v);
  check_unique(desc.efps, "efp", v);
  check_unique(desc.features, "feature", v);
  if (desc.efps.empty()) v.push_back("efps: at least one EFP is required");
  for (const auto& name : desc.efps)
    if (!valid_identifier(name)) v.push_back("efps: invalid identifier '" + name + "'");
  for (const auto& name : desc.features)
    if (!valid_identifier(name)) v.push_back("features: invalid identifier '" + name + "'");

  const auto& doe = desc.doe_params;
  if (doe.n < 2) v.push_back("doe.n: n >= 2");
  if (!(doe.epsilon > 0)) v.push_back("doe.epsilon: epsilon > 0");
  if (doe.repetitions < 1) v.push_back("doe.repetitions: repetitions >= 1");
  if (!doe.restriction.empty()) {
    try {
      Restriction::compile(doe.restriction, desc.knobs);
    } catch (const Error& e) {
      v.push_back(std::string("doe.restriction: ") + e.what());
    }
  }

  const auto& lp = desc.learn_params;
  if (!(lp.v_f >= 0 && lp.v_f < 1)) v.push_back("learn.v_f: 0 <= v_f < 1");
  if (lp.k_folds < 2) v.push_back("learn.k_folds: k_folds >= 2");
  if (!(lp.eps_m > 0)) v.push_back("learn.eps_m: eps_m > 0");
  if (lp.max_iterations < -1 || lp.max_iterations == 0)
    v.push_back("learn.max_iterations: must be positive or -1");

  const auto& cp = desc.cluster_params;
  if (cp.k < 1) v.push_back("clustering.k: k >= 1");
  if (!(cp.eps_dist > 0)) v.push_back("clustering.eps_dist: eps_dist > 0");
  if (cp.min_pts < 1) v.push_back("clustering.min_pts: min_pts >= 1");
  if (cp.method == ClusterMethod::none && !desc.features.empty())
    v.push_back("clustering.method: declared features need a clustering method");
  if (cp.method == ClusterMethod::manual) {
    if (cp.manual_centroids.empty())
      v.push_back("clustering.manual_centroids: required for the manual method");
    for (std::size_t i = 0; i < cp.manual_centroids.size(); ++i)
      if (cp.manual_centroids[i].values.size() != desc.features.size())
        v.push_back("clustering.manual_centroids[" + std::to_string(i) +
                    "]: dimension must equal the feature count");
  }
  return v;
}

std::string ApplicationDescription::to_json() const {
  json j;
  j["name"] = app_name;
  j["knobs"] = json::array();
  for (const auto& k : knobs) j["knobs"].push_back({{"name", k.name}, {"values", k.values}});
  j["efps"] = efps;
  j["features"] = features;
  j["doe"] = {{"n", doe_params.n},
              {"epsilon", doe_params.epsilon},
              {"repetitions", doe_params.repetitions}};
  if (!doe_params.restriction.empty()) j["doe"]["restriction"] = doe_params.restriction;
  j["learn"] = {{"eps_r", learn_params.eps_r},     {"eps_m", learn_params.eps_m},
                {"max_iterations", learn_params.max_iterations},
                {"k_folds", learn_params.k_folds}, {"v_f", learn_params.v_f},
                {"seed", learn_params.rng_seed}};
  j["clustering"] = {{"method", to_string(cluster_params.method)},
                     {"k", cluster_params.k},
                     {"eps_dist", cluster_params.eps_dist},
                     {"min_pts", cluster_params.min_pts}};
  if (!cluster_params.manual_centroids.empty()) {
    json arr = json::array();
    for (const auto& c : cluster_params.manual_centroids) arr.push_back(c.values);
    j["clustering"]["centroids"] = arr;
  }
  return j.dump();
}

ApplicationDescription ApplicationDescription::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("description is not valid JSON: ") + e.what());
  }
  ApplicationDescription d;
  try {
    d.app_name = j.at("name").get<std::string>();
    for (const auto& jk : j.at("knobs")) {
      KnobDomain k;
      k.name = jk.at("name").get<std::string>();
      k.values = jk.at("values").get<std::vector<double>>();
      d.knobs.push_back(std::move(k));
    }
    d.efps = j.at("efps").get<std::vector<std::string>>();
    if (j.contains("features")) d.features = j.at("features").get<std::vector<std::string>>();
    if (j.contains("doe")) {
      const auto& jd = j.at("doe");
      d.doe_params.n = jd.value("n", d.doe_params.n);
      d.doe_params.epsilon = jd.value("epsilon", d.doe_params.epsilon);
      d.doe_params.repetitions = jd.value("repetitions", d.doe_params.repetitions);
      d.doe_params.restriction = jd.value("restriction", std::string());
    }
    if (j.contains("learn")) {
      const auto& jl = j.at("learn");
      d.learn_params.eps_r = jl.value("eps_r", d.learn_params.eps_r);
      d.learn_params.eps_m = jl.value("eps_m", d.learn_params.eps_m);
      d.learn_params.max_iterations = jl.value("max_iterations", d.learn_params.max_iterations);
      d.learn_params.k_folds = jl.value("k_folds", d.learn_params.k_folds);
      d.learn_params.v_f = jl.value("v_f", d.learn_params.v_f);
      d.learn_params.rng_seed = jl.value("seed", d.learn_params.rng_seed);
    }
    if (j.contains("clustering")) {
      const auto& jc = j.at("clustering");
      d.cluster_params.method = cluster_method_from_string(jc.value("method", std::string("none")));
      d.cluster_params.k = jc.value("k", d.cluster_params.k);
      d.cluster_params.eps_dist = jc.value("eps_dist", d.cluster_params.eps_dist);
      d.cluster_params.min_pts = jc.value("min_pts", d.cluster_params.min_pts);
      if (jc.contains("centroids"))
        for (const auto& jv : jc.at("centroids"))
          d.cluster_params.manual_centroids.push_back({jv.get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed description: ") + e.what());
  }
  return d;
}

std::size_t nearest_value_index(const KnobDomain& domain, double v) {
  if (domain.values.empty()) throw Error("nearest_value_index: empty domain");
  std::size_t best = 0;
  double best_dist = std::abs(domain.values[0] - v);
  for (std::size_t i = 1; i < domain.values.size(); ++i) {
    const double dist = std::abs(domain.values[i] - v);
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

bool config_in_domain(const std::vector<KnobDomain>& knobs, const KnobConfig& config) {
  if (config.values.size() != knobs.size()) return false;
  for (std::size_t i = 0; i < knobs.size(); ++i) {
    const auto& vals = knobs[i].values;
    if (std::find(vals.begin(), vals.end(), config.values[i]) == vals.end()) return false;
  }
  return true;
}

}  // namespace otto
