/*
 * model.cpp
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

#include "otto/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace otto {

std::vector<bool> Dataset::constant_columns() const {
  std::vector<bool> flags(cols(), true);
  for (std::size_t j = 0; j < cols(); ++j) {
    const auto col = predictors.col(static_cast<Eigen::Index>(j));
    for (Eigen::Index i = 1; i < col.size(); ++i) {
      if (col(i) != col(0)) {
        flags[j] = false;
        break;
      }
    }
  }
  return flags;
}

void Dataset::validate() const {
  if (predictors.rows() < 1) throw Error("dataset: empty");
  if (predictors.rows() != targets.size()) throw Error("dataset: row/target count mismatch");
  if (column_names.size() != cols()) throw Error("dataset: column name count mismatch");
  if (n_knobs > cols()) throw Error("dataset: knob count exceeds column count");
  if (!predictors.allFinite() || !targets.allFinite())
    throw Error("dataset: non-finite entries");
}

std::vector<std::vector<int>> Dataset::distinct_config_groups() const {
  std::vector<int> order(static_cast<std::size_t>(predictors.rows()));
  std::iota(order.begin(), order.end(), 0);
  const auto knob_cols = static_cast<Eigen::Index>(n_knobs);
  auto key_less = [&](int a, int b) {
    for (Eigen::Index j = 0; j < knob_cols; ++j) {
      if (predictors(a, j) != predictors(b, j)) return predictors(a, j) < predictors(b, j);
    }
    return false;
  };
  auto key_equal = [&](int a, int b) {
    for (Eigen::Index j = 0; j < knob_cols; ++j)
      if (predictors(a, j) != predictors(b, j)) return false;
    return true;
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  std::vector<std::vector<int>> groups;
  for (int row : order) {
    if (groups.empty() || !key_equal(groups.back().front(), row)) groups.push_back({});
    groups.back().push_back(row);
  }
  return groups;
}

Dataset Dataset::from_observations(const ApplicationDescription& desc,
                                   const std::vector<Observation>& observations,
                                   std::size_t efp_index) {
  if (observations.empty()) throw Error("dataset: no observations");
  if (efp_index >= desc.efps.size()) throw Error("dataset: EFP index out of range");

  // Canonical row order makes every downstream fit independent of message
  // arrival order: sort by config, then features, timestamp, client.
  std::vector<const Observation*> sorted;
  sorted.reserve(observations.size());
  for (const auto& o : observations) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](const Observation* a, const Observation* b) {
    if (a->config.values != b->config.values) return a->config.values < b->config.values;
    if (a->features.values != b->features.values) return a->features.values < b->features.values;
    if (a->timestamp_ms != b->timestamp_ms) return a->timestamp_ms < b->timestamp_ms;
    return a->client_id < b->client_id;
  });

  const std::size_t p = desc.knobs.size() + desc.features.size();
  Dataset data;
  data.n_knobs = desc.knobs.size();
  data.predictors.resize(static_cast<Eigen::Index>(sorted.size()), static_cast<Eigen::Index>(p));
  data.targets.resize(static_cast<Eigen::Index>(sorted.size()));
  for (const auto& k : desc.knobs) data.column_names.push_back(k.name);
  for (const auto& f : desc.features) data.column_names.push_back(f);

  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Observation& o = *sorted[i];
    if (o.config.values.size() != desc.knobs.size() ||
        o.features.values.size() != desc.features.size() ||
        o.metrics.values.size() != desc.efps.size())
      throw Error("dataset: observation arity mismatch");
    Eigen::Index j = 0;
    const auto row = static_cast<Eigen::Index>(i);
    for (double v : o.config.values) data.predictors(row, j++) = v;
    for (double v : o.features.values) data.predictors(row, j++) = v;
    data.targets(row) = o.metrics.values[efp_index];
  }
  data.validate();
  return data;
}

Dataset Dataset::subset(const std::vector<int>& row_indices) const {
  Dataset out;
  out.column_names = column_names;
  out.n_knobs = n_knobs;
  out.predictors.resize(static_cast<Eigen::Index>(row_indices.size()), predictors.cols());
  out.targets.resize(static_cast<Eigen::Index>(row_indices.size()));
  for (std::size_t i = 0; i < row_indices.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.predictors.row(row) = predictors.row(row_indices[i]);
    out.targets(row) = targets(row_indices[i]);
  }
  return out;
}

const std::vector<std::string>& base_families() {
  static const std::vector<std::string> families = {"linear1", "linear1x", "mars", "polymars",
                                                    "kriging"};
  return families;
}

ModelPtr fit_family(const std::string& family, const Dataset& data) {
  if (family == "linear1") return fit_linear(data, false);
  if (family == "linear1x") return fit_linear(data, true);
  if (family == "mars") return fit_mars(data);
  if (family == "polymars") return fit_polymars(data);
  if (family == "kriging") return fit_kriging(data);
  throw Error("fit_family: unknown family '" + family + "'");
}

}  // namespace otto
