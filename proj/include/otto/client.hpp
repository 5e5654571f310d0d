/*
 * client.hpp
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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "otto/bus.hpp"
#include "otto/types.hpp"

namespace otto {

/// What the application wants from the selector: one EFP to optimize and an
/// ordered set of threshold constraints. Priorities are unique; larger means
/// more important, and infeasible constraint sets are relaxed by dropping
/// the smallest priority first.
struct Requirements {
  struct Constraint {
    int efp = 0;
    bool is_upper = true;  ///< true: value <= threshold; false: value >= threshold
    double threshold = 0.0;
    int priority = 0;
  };
  int rank_efp = 0;
  bool maximize = false;
  std::vector<Constraint> constraints;
};

/// Where get_config's answer came from.
enum class ConfigSource {
  fallback,   ///< no assignment, no knowledge: first valid grid config
  assigned,   ///< design-exploration assignment
  free_run,   ///< assignments exhausted, broadcast not yet received
  knowledge,  ///< selector over the installed operating points
};

/// Selects an operating point: restrict to the nearest centroid's block,
/// scale expected EFPs by the per-EFP corrections, filter by constraints
/// (relaxing from the lowest priority when nothing survives), then best by
/// rank; ties resolve to the lower lexicographic config. kb must be
/// non-empty.
OperatingPoint select_op(const KnowledgeBase& kb, const Requirements& reqs,
                         const FeatureVector& features, const std::vector<double>& corrections);

/// Per-EFP multiplicative corrections from a monitor window of (observed,
/// expected) pairs: mean(observed)/mean(expected), 1.0 on an empty window or
/// a zero expected mean. Window capacity defaults to 10 (ring buffer).
class MonitorWindow {
 public:
  explicit MonitorWindow(std::size_t n_efps, std::size_t capacity = 10);
  void add(const EfpVector& observed, const EfpVector& expected);
  std::vector<double> correction_factors() const;

 private:
  struct Ring {
    std::vector<std::pair<double, double>> pairs;
    std::size_t next = 0;
    bool full = false;
  };
  std::size_t capacity_;
  std::vector<Ring> rings_;
};

struct ClientOptions {
  std::string client_id;           ///< unique per client; required
  double heartbeat_seconds = 5.0;
  std::size_t publish_buffer_cap = 10000;  ///< unsent observations kept
};

/// The application-side handler: owns a service thread that performs the
/// hello/heartbeat protocol, answers description requests, tracks design
/// assignments and installs broadcast knowledge atomically. get_config and
/// report are safe from any application thread and never touch the network
/// on the calling path (report enqueues on failure and the service thread
/// retries).
class Client {
 public:
  Client(BusPtr bus, std::string app_name,
         std::function<ApplicationDescription()> desc_provider, ClientOptions options);
  ~Client();

  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void start();
  void stop();     ///< publishes bye and joins the service thread
  void abandon();  ///< stops without a bye, as a crashing process would

  KnobConfig get_config(const FeatureVector& features);
  std::pair<KnobConfig, ConfigSource> get_config_ex(const FeatureVector& features);

  void report(const KnobConfig& config, const FeatureVector& features, const EfpVector& metrics);

  void set_requirements(const Requirements& reqs);

  bool has_knowledge() const;
  std::string knowledge_payload() const;  ///< raw broadcast bytes (tests)
  std::size_t assignments_left() const;
  const std::string& client_id() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace otto
