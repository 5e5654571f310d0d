/*
 * knowledge.cpp
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

#include "otto/knowledge.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "otto/doe.hpp"
#include "otto/evaluate.hpp"

namespace otto {

KnowledgeBase generate_knowledge(
    const ApplicationDescription& desc,
    const std::vector<std::pair<std::string, ModelPtr>>& selected_models,
    const std::vector<FeatureVector>& centroids, KnowledgeGenStats* stats) {
  if (selected_models.size() != desc.efps.size())
    throw Error("generate_knowledge: one model per EFP required");
  if (centroids.empty()) throw Error("generate_knowledge: no centroids");
  const std::size_t n_feat = desc.features.size();
  for (const auto& c : centroids)
    if (c.size() != n_feat)
      throw Error("generate_knowledge: centroid dimension does not match the features");

  std::vector<KnobConfig> grid = full_factorial(desc.knobs);
  Restriction restriction = Restriction::compile(desc.doe_params.restriction, desc.knobs);
  grid = apply_restrictions(grid, restriction);

  const std::size_t total = grid.size() * centroids.size();
  if (total > 1000000) throw Error("generate_knowledge: operating-point list beyond 10^6 rows");

  KnowledgeBase kb;
  kb.centroids = centroids;
  kb.ops.reserve(total);
  std::size_t dropped = 0;

  const std::size_t dim = desc.knobs.size() + n_feat;
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
  for (const auto& centroid : centroids) {
    for (std::size_t f = 0; f < n_feat; ++f)
      x(static_cast<Eigen::Index>(desc.knobs.size() + f)) = centroid[f];
    for (const auto& config : grid) {
      for (std::size_t k = 0; k < config.size(); ++k)
        x(static_cast<Eigen::Index>(k)) = config[k];
      OperatingPoint op;
      op.config = config;
      op.features = centroid;
      op.expected.resize(desc.efps.size());
      bool finite = true;
      for (std::size_t e = 0; e < desc.efps.size(); ++e) {
        const double y = selected_models[e].second->predict(x);
        if (!std::isfinite(y)) {
          finite = false;
          break;
        }
        op.expected[e] = y;
      }
      if (finite)
        kb.ops.push_back(std::move(op));
      else
        ++dropped;
    }
  }

  if (stats) {
    stats->total = total;
    stats->dropped = dropped;
  }
  if (dropped * 100 > total)
    throw Error("generate_knowledge: more than 1% of rows had non-finite predictions");
  return kb;
}

std::vector<EfpError> knowledge_error(
    const ApplicationDescription& desc, const KnowledgeBase& kb,
    const std::function<EfpVector(const KnobConfig&, const FeatureVector&)>& oracle) {
  if (kb.ops.empty()) throw Error("knowledge_error: empty knowledge base");
  const std::size_t n_efp = desc.efps.size();
  const Eigen::Index n = static_cast<Eigen::Index>(kb.ops.size());

  std::vector<EfpError> out(n_efp);
  Eigen::MatrixXd truth(n, static_cast<Eigen::Index>(n_efp));
  Eigen::MatrixXd expected(n, static_cast<Eigen::Index>(n_efp));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& op = kb.ops[static_cast<std::size_t>(i)];
    const EfpVector t = oracle(op.config, op.features);
    if (t.size() != n_efp || op.expected.size() != n_efp)
      throw Error("knowledge_error: EFP arity mismatch");
    for (std::size_t e = 0; e < n_efp; ++e) {
      truth(i, static_cast<Eigen::Index>(e)) = t[e];
      expected(i, static_cast<Eigen::Index>(e)) = op.expected[e];
    }
  }
  for (std::size_t e = 0; e < n_efp; ++e) {
    out[e].efp = desc.efps[e];
    const Eigen::VectorXd o = truth.col(static_cast<Eigen::Index>(e));
    const Eigen::VectorXd p = expected.col(static_cast<Eigen::Index>(e));
    out[e].mae_adj = mae_adj(o, p).value;
    out[e].signed_r2 = signed_r2(o, p);
  }
  return out;
}

}  // namespace otto
