/*
 * knowledge.hpp
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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "otto/model.hpp"
#include "otto/types.hpp"

namespace otto {

struct KnowledgeGenStats {
  std::size_t total = 0;    ///< grid size x centroid count
  std::size_t dropped = 0;  ///< rows lost to non-finite predictions
};

/// One OperatingPoint per (centroid, restricted-grid config) pair, centroid
/// as the outer loop, so ops arrive in contiguous per-centroid blocks of
/// grid size. Expected EFPs are the selected models' predictions at
/// (config (+) centroid). Rows with non-finite predictions are dropped and
/// counted; more than 1% dropped (or an op count beyond 10^6) throws.
KnowledgeBase generate_knowledge(
    const ApplicationDescription& desc,
    const std::vector<std::pair<std::string, ModelPtr>>& selected_models,
    const std::vector<FeatureVector>& centroids, KnowledgeGenStats* stats = nullptr);

struct EfpError {
  std::string efp;
  double mae_adj = 0.0;
  double signed_r2 = 0.0;
};

/// Compares the knowledge base's expected values against ground truth over
/// all operating points (harness/test use only).
std::vector<EfpError> knowledge_error(
    const ApplicationDescription& desc, const KnowledgeBase& kb,
    const std::function<EfpVector(const KnobConfig&, const FeatureVector&)>& oracle);

}  // namespace otto
