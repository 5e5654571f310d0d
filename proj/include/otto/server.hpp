/*
 * server.hpp
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

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otto/bus.hpp"
#include "otto/storage.hpp"
#include "otto/types.hpp"

namespace otto {

enum class Phase { awaiting_info, exploring, modeling, serving };
const char* to_string(Phase p);

struct ServerOptions {
  double heartbeat_seconds = 5.0;  ///< client liveness period; 3 missed = dead
  std::uint64_t rng_seed = 0;      ///< base seed for design/validation draws
};

/// The remote application handler: drives the workflow per application
/// (info handshake, design dispatch, observation collection, learning,
/// knowledge broadcast), reclaims work from dead clients, and recovers its
/// state from storage on start.
class Server {
 public:
  Server(BusPtr bus, StoragePtr storage, ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();

  struct AppStatus {
    Phase phase = Phase::awaiting_info;
    int iteration = 0;
    std::size_t pending_evaluations = 0;  ///< config x repetition units left
    std::size_t observations = 0;
    std::size_t live_clients = 0;
    bool has_knowledge = false;
    std::string knowledge_payload;        ///< broadcast bytes, empty until serving
    /// Milestone timestamps (steady clock) for timing experiments.
    std::chrono::steady_clock::time_point first_hello{};
    std::chrono::steady_clock::time_point explore_done{};
    std::chrono::steady_clock::time_point knowledge_ready{};
  };

  std::optional<AppStatus> app_status(const std::string& app) const;
  std::vector<std::string> known_apps() const;

  /// Blocks until the app reaches `phase` (or later in the lifecycle order).
  bool wait_for_phase(const std::string& app, Phase phase, std::chrono::milliseconds timeout);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace otto
