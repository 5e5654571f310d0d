/*
 * server.cpp
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

#include "otto/server.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "otto/clustering.hpp"
#include "otto/doe.hpp"
#include "otto/evaluate.hpp"
#include "otto/knowledge.hpp"
#include "otto/log.hpp"
#include "otto/message.hpp"

namespace otto {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) + 0xbf58476d1ce4e5b9ULL * (c + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int phase_rank(Phase p) {
  switch (p) {
    case Phase::awaiting_info: return 0;
    case Phase::exploring: return 1;
    case Phase::modeling: return 2;
    case Phase::serving: return 3;
  }
  return 0;
}

struct PipelineResult {
  bool valid = false;
  std::vector<csv::ReportRow> report;
  KnowledgeBase kb;
  std::string payload;
  std::string error;  ///< non-empty: the pipeline itself failed
};

/// The learning pipeline, run off the message path on copied inputs.
PipelineResult run_pipeline(const ApplicationDescription desc,
                            const std::vector<Observation> observations, const int iteration,
                            const bool final_round, const std::uint64_t seed_base) {
  PipelineResult result;
  try {
    const LearnParams& params = desc.learn_params;
    std::vector<std::pair<std::string, ModelPtr>> selected;
    std::vector<ModelTag> tags;
    bool all_eligible = true;

    for (std::size_t e = 0; e < desc.efps.size(); ++e) {
      const Dataset data = Dataset::from_observations(desc, observations, e);
      const std::uint64_t seed =
          mix_seed(seed_base, static_cast<std::uint64_t>(iteration), e);
      const ValidationReport report = evaluate_candidates(data, params, seed);
      const SelectionOutcome outcome = select_model(report, params, iteration, final_round);

      for (const auto& c : report.candidates) {
        csv::ReportRow row;
        row.efp = desc.efps[e];
        row.family = c.family;
        row.regime = to_string(report.regime);
        row.signed_r2 = c.signed_r2;
        row.mae_adj = c.mae_adj;
        row.status = c.family == outcome.chosen ? "selected" : c.status;
        result.report.push_back(std::move(row));
      }

      if (outcome.chosen.empty()) {
        all_eligible = false;
        continue;
      }
      ModelPtr model = fit_final(outcome.chosen, data, params, seed);
      selected.emplace_back(outcome.chosen, std::move(model));
      for (const auto& c : report.candidates)
        if (c.family == outcome.chosen)
          tags.push_back(ModelTag{desc.efps[e], c.family, c.signed_r2, c.mae_adj});
    }

    if (!all_eligible) return result;  // valid stays false: restart signal

    std::vector<FeatureVector> features;
    features.reserve(observations.size());
    for (const auto& obs : observations) features.push_back(obs.features);
    std::vector<std::string> warnings;
    const auto centroids = cluster_features(features, desc.cluster_params,
                                            mix_seed(seed_base, iteration, 9999), &warnings);
    for (const auto& w : warnings) log::warn(desc.app_name + ": " + w);

    result.kb = generate_knowledge(desc, selected, centroids);
    result.kb.model_tags = tags;
    result.payload = build_knowledge_payload(desc, result.kb);
    result.valid = true;
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace

const char* to_string(Phase p) {
  switch (p) {
    case Phase::awaiting_info: return "awaiting_info";
    case Phase::exploring: return "exploring";
    case Phase::modeling: return "modeling";
    case Phase::serving: return "serving";
  }
  return "unknown";
}

struct Server::Impl {
  BusPtr bus;
  StoragePtr storage;
  ServerOptions options;

  SubscriptionPtr sub;
  std::thread loop;
  std::atomic<bool> stopping{false};

  struct ClientState {
    std::chrono::steady_clock::time_point last_seen;
    std::vector<csv::DoeRow> assignment;
  };

  struct Session {
    std::optional<ApplicationDescription> desc;
    Phase phase = Phase::awaiting_info;
    int iteration = 0;
    bool aborted = false;
    std::map<std::string, ClientState> clients;
    std::map<KnobConfig, int> pending;  ///< config -> evaluations still owed
    std::set<KnobConfig> explored;      ///< configs placed in any design batch
    std::vector<Observation> observations;
    std::set<std::tuple<std::string, KnobConfig, std::int64_t>> seen;
    std::optional<KnowledgeBase> knowledge;
    std::string knowledge_payload;
    std::string info_target;  ///< client asked for the description
    std::future<PipelineResult> pipeline;
    bool pipeline_running = false;
    std::chrono::steady_clock::time_point first_hello{};
    std::chrono::steady_clock::time_point explore_done{};
    std::chrono::steady_clock::time_point knowledge_ready{};
  };

  mutable std::mutex mu;
  std::condition_variable phase_cv;
  std::map<std::string, Session> sessions;

  // -- helpers (callers hold mu) -------------------------------------------

  void publish(const std::string& topic, const std::string& payload) {
    bus->publish(Message{topic, payload});
  }

  void abort_session(const std::string& app, Session& s, const std::string& reason) {
    log::error(app + ": session aborted: " + reason);
    s.aborted = true;
    publish(make_topic(app, channel::error), build_payload(schema::error, {reason}));
  }

  std::size_t pending_units(const Session& s) const {
    std::size_t total = 0;
    for (const auto& [config, reps] : s.pending) total += static_cast<std::size_t>(reps);
    return total;
  }

  /// Full re-deal: every owed evaluation unit is dealt cyclically over the
  /// live clients (sorted by id); each client then receives its whole new
  /// assignment on the explore channel (replace semantics).
  void deal(const std::string& app, Session& s) {
    for (auto& [id, client] : s.clients) client.assignment.clear();
    if (s.clients.empty()) {
      log::info(app + ": dispatch deferred, no live clients");
      return;
    }
    std::vector<std::string> ids;
    ids.reserve(s.clients.size());
    for (const auto& [id, client] : s.clients) ids.push_back(id);

    std::size_t turn = 0;
    for (const auto& [config, reps] : s.pending) {  // map order = lexicographic
      for (int r = 0; r < reps; ++r) {
        auto& assignment = s.clients[ids[turn % ids.size()]].assignment;
        if (!assignment.empty() && assignment.back().config == config)
          assignment.back().remaining_repetitions += 1;
        else
          assignment.push_back(csv::DoeRow{config, 1});
        ++turn;
      }
    }
    for (const auto& id : ids) send_assignment(app, s, id);
  }

  void send_assignment(const std::string& app, Session& s, const std::string& client_id) {
    if (!s.desc) return;
    csv::DoeCodec codec(*s.desc);
    std::vector<std::string> lines{codec.header()};
    for (const auto& row : s.clients[client_id].assignment) lines.push_back(codec.encode(row));
    publish(make_topic(app, channel::explore, client_id),
            build_payload(schema::explore, lines));
  }

  /// Starts a DSE round: design over unexplored grid configs, persisted,
  /// dealt out. Returns false when the session had to be aborted.
  bool launch_design(const std::string& app, Session& s) {
    try {
      const std::uint64_t seed = mix_seed(s.desc->learn_params.rng_seed + options.rng_seed,
                                          static_cast<std::uint64_t>(s.iteration));
      const Design design = generate_design(*s.desc, s.explored, seed);

      std::vector<csv::DoeRow> rows;
      rows.reserve(design.points.size());
      for (const auto& config : design.points) {
        rows.push_back(csv::DoeRow{config, design.repetitions});
        s.pending[config] += design.repetitions;
        s.explored.insert(config);
      }
      storage->append_doe(app, *s.desc, rows);
      storage->write_meta(app, s.iteration);
      s.phase = Phase::exploring;
      phase_cv.notify_all();
      log::info(app + ": iteration " + std::to_string(s.iteration) + ", " +
                std::to_string(design.points.size()) + " configs to explore" +
                (design.saturated ? " (grid saturated)" : ""));
      deal(app, s);
      return true;
    } catch (const std::exception& e) {
      abort_session(app, s, std::string("design generation failed: ") + e.what());
      return false;
    }
  }

  bool restart_possible(const Session& s) const {
    const int max_it = s.desc->learn_params.max_iterations;
    if (max_it > 0 && s.iteration + 1 >= max_it) return false;
    // any unexplored restricted-grid config left?
    try {
      auto grid = full_factorial(s.desc->knobs);
      grid = apply_restrictions(
          grid, Restriction::compile(s.desc->doe_params.restriction, s.desc->knobs));
      for (const auto& config : grid)
        if (!s.explored.count(config)) return true;
    } catch (const std::exception&) {
      return false;
    }
    return false;
  }

  void start_pipeline(const std::string& app, Session& s) {
    s.phase = Phase::modeling;
    s.explore_done = std::chrono::steady_clock::now();
    phase_cv.notify_all();
    const bool final_round = !restart_possible(s);
    const std::uint64_t seed_base = s.desc->learn_params.rng_seed + options.rng_seed;
    log::info(app + ": modeling on " + std::to_string(s.observations.size()) +
              " observations" + (final_round ? " (final round)" : ""));
    s.pipeline = std::async(std::launch::async, run_pipeline, *s.desc, s.observations,
                            s.iteration, final_round, seed_base);
    s.pipeline_running = true;
  }

  void apply_pipeline(const std::string& app, Session& s, PipelineResult result) {
    if (!result.error.empty()) {
      abort_session(app, s, "learning pipeline failed: " + result.error);
      return;
    }
    storage->write_report(app, result.report);
    if (result.valid) {
      storage->write_knowledge(app, *s.desc, result.kb);
      s.knowledge = std::move(result.kb);
      s.knowledge_payload = std::move(result.payload);
      s.phase = Phase::serving;
      s.knowledge_ready = std::chrono::steady_clock::now();
      phase_cv.notify_all();
      publish(make_topic(app, channel::knowledge), s.knowledge_payload);
      log::info(app + ": knowledge broadcast (" +
                std::to_string(s.knowledge->ops.size()) + " operating points)");
    } else {
      s.iteration += 1;
      log::info(app + ": no eligible model, restarting exploration");
      launch_design(app, s);
    }
  }

  // -- message handlers (loop thread, mu held) ------------------------------

  void on_welcome(const std::string& app, const std::string& client_id,
                  const std::string& payload) {
    auto& s = sessions[app];
    if (s.aborted) return;
    const auto now = std::chrono::steady_clock::now();
    if (s.first_hello.time_since_epoch().count() == 0) s.first_hello = now;

    bool is_hello = true;
    try {
      const auto parsed = parse_payload(payload);
      is_hello = parsed.lines.empty() || parsed.lines.front() != "heartbeat";
    } catch (const std::exception&) {
      // tolerate unknown payloads as hellos
    }
    const bool known = s.clients.count(client_id) > 0;
    s.clients[client_id].last_seen = now;
    if (!is_hello && known) return;  // plain heartbeat refresh

    switch (s.phase) {
      case Phase::awaiting_info:
        if (!s.desc) {
          if (s.info_target.empty() || !s.clients.count(s.info_target)) {
            s.info_target = client_id;
            publish(make_topic(app, channel::info_request, client_id),
                    build_payload(schema::info_request, {}));
            log::info(app + ": asked " + client_id + " for the description");
          }
        }
        break;
      case Phase::exploring:
        if (!known)
          deal(app, s);  // membership change: full re-deal
        else
          send_assignment(app, s, client_id);  // idempotent re-greeting
        break;
      case Phase::modeling:
        break;  // registered; will receive the broadcast or the next deal
      case Phase::serving:
        publish(make_topic(app, channel::knowledge, client_id), s.knowledge_payload);
        break;
    }
  }

  void on_info_reply(const std::string& app, const std::string& client_id,
                     const std::string& payload) {
    auto& s = sessions[app];
    if (s.aborted) return;
    if (s.phase != Phase::awaiting_info || s.desc) return;  // idempotent
    (void)client_id;
    try {
      const auto parsed = parse_payload(payload);
      if (parsed.schema != schema::description || parsed.lines.empty())
        throw Error("bad description payload");
      ApplicationDescription desc = ApplicationDescription::from_json(parsed.lines.front());
      if (desc.app_name != app)
        throw Error("description name '" + desc.app_name + "' does not match topic app");
      const auto problems = validate_description(desc);
      if (!problems.empty()) {
        std::string joined;
        for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
        throw Error(joined);
      }
      storage->write_description(app, parsed.lines.front());
      s.desc = std::move(desc);
    } catch (const std::exception& e) {
      abort_session(app, s, std::string("invalid description: ") + e.what());
      return;
    }
    launch_design(app, s);
  }

  void on_observation(const std::string& app, const std::string& client_id,
                      const std::string& payload) {
    auto& s = sessions[app];
    if (s.aborted || !s.desc) return;
    Observation obs;
    try {
      const auto parsed = parse_payload(payload);
      if (parsed.schema != schema::observation || parsed.lines.size() < 2)
        throw Error("bad observation payload");
      obs = csv::ObservationCodec(*s.desc).decode(parsed.lines[1]);
    } catch (const std::exception& e) {
      log::warn(app + ": dropping malformed observation from " + client_id + ": " +
                e.what());
      return;
    }

    const auto key = std::make_tuple(obs.client_id, obs.config, obs.timestamp_ms);
    if (s.seen.count(key)) return;  // at-least-once delivery: duplicate frame
    s.seen.insert(key);
    storage->append_observation(app, *s.desc, obs);
    s.observations.push_back(obs);

    if (s.phase != Phase::exploring) return;  // refinement data, no phase change

    auto it = s.pending.find(obs.config);
    if (it == s.pending.end() || it->second <= 0) {
      log::debug(app + ": free-run observation from " + client_id + " (unassigned config)");
      return;
    }
    it->second -= 1;
    if (it->second == 0) s.pending.erase(it);
    // keep the reporter's recorded assignment roughly in sync
    auto client = s.clients.find(client_id);
    if (client != s.clients.end()) {
      auto& rows = client->second.assignment;
      for (auto row = rows.begin(); row != rows.end(); ++row)
        if (row->config == obs.config) {
          if (--row->remaining_repetitions <= 0) rows.erase(row);
          break;
        }
    }
    if (s.pending.empty()) start_pipeline(app, s);
  }

  void on_bye(const std::string& app, const std::string& client_id) {
    auto& s = sessions[app];
    if (!s.clients.erase(client_id)) return;
    log::info(app + ": client " + client_id + " said bye");
    if (s.phase == Phase::exploring) deal(app, s);
  }

  // -- loop ------------------------------------------------------------------

  void sweep(std::chrono::steady_clock::time_point now) {
    const auto limit = std::chrono::duration<double>(3.0 * options.heartbeat_seconds);
    for (auto& [app, s] : sessions) {
      if (s.aborted) continue;
      std::vector<std::string> dead;
      for (const auto& [id, client] : s.clients)
        if (now - client.last_seen > limit) dead.push_back(id);
      if (dead.empty()) continue;
      for (const auto& id : dead) {
        log::warn(app + ": client " + id + " missed 3 heartbeats, reclaiming its work");
        s.clients.erase(id);
      }
      if (s.phase == Phase::exploring) deal(app, s);
      if (s.phase == Phase::awaiting_info && !s.desc &&
          std::find(dead.begin(), dead.end(), s.info_target) != dead.end()) {
        s.info_target.clear();
        if (!s.clients.empty()) {
          s.info_target = s.clients.begin()->first;
          publish(make_topic(app, channel::info_request, s.info_target),
                  build_payload(schema::info_request, {}));
        }
      }
    }
  }

  void poll_pipelines() {
    for (auto& [app, s] : sessions) {
      if (!s.pipeline_running) continue;
      if (s.pipeline.wait_for(std::chrono::seconds(0)) != std::future_status::ready) continue;
      s.pipeline_running = false;
      apply_pipeline(app, s, s.pipeline.get());
    }
  }

  void run_loop() {
    auto last_sweep = std::chrono::steady_clock::now();
    while (!stopping) {
      auto msg = sub->pop(std::chrono::milliseconds(50));
      std::lock_guard<std::mutex> lock(mu);
      if (msg) {
        const auto parts = parse_topic(msg->topic);
        if (parts && !parts->client_id.empty()) {
          if (parts->channel == channel::welcome)
            on_welcome(parts->app, parts->client_id, msg->payload);
          else if (parts->channel == channel::info_reply)
            on_info_reply(parts->app, parts->client_id, msg->payload);
          else if (parts->channel == channel::observation)
            on_observation(parts->app, parts->client_id, msg->payload);
          else if (parts->channel == channel::bye)
            on_bye(parts->app, parts->client_id);
        }
      }
      const auto now = std::chrono::steady_clock::now();
      if (now - last_sweep > std::chrono::milliseconds(200)) {
        sweep(now);
        last_sweep = now;
      }
      poll_pipelines();
    }
  }

  // -- recovery ---------------------------------------------------------------

  void recover() {
    for (const auto& app : storage->list_apps()) {
      const auto json = storage->read_description(app);
      if (!json) continue;
      Session s;
      try {
        s.desc = ApplicationDescription::from_json(*json);
      } catch (const std::exception& e) {
        log::warn(app + ": stored description unreadable, ignoring app: " + e.what());
        continue;
      }
      s.iteration = storage->read_meta(app).value_or(0);

      std::size_t bad_doe = 0, bad_obs = 0;
      const auto doe = storage->read_doe(app, *s.desc, &bad_doe);
      s.observations = storage->read_observations(app, *s.desc, &bad_obs);
      if (bad_doe + bad_obs > 0)
        log::warn(app + ": skipped " + std::to_string(bad_doe) + " doe and " +
                  std::to_string(bad_obs) + " observation rows during recovery");

      std::map<KnobConfig, int> owed;
      for (const auto& row : doe) {
        owed[row.config] += row.remaining_repetitions;
        s.explored.insert(row.config);
      }
      for (const auto& obs : s.observations) {
        s.seen.insert(std::make_tuple(obs.client_id, obs.config, obs.timestamp_ms));
        auto it = owed.find(obs.config);
        if (it != owed.end() && it->second > 0) it->second -= 1;
      }
      for (const auto& [config, reps] : owed)
        if (reps > 0) s.pending[config] = reps;

      s.knowledge = storage->read_knowledge(app, *s.desc);
      if (s.knowledge) {
        s.knowledge_payload = build_knowledge_payload(*s.desc, *s.knowledge);
        s.phase = Phase::serving;
      } else if (doe.empty()) {
        // crashed between description and first design: restart the design
        launch_design(app, s);
      } else if (!s.pending.empty()) {
        s.phase = Phase::exploring;
      } else {
        start_pipeline(app, s);
      }
      log::info("recovered app '" + app + "' in phase " + to_string(s.phase) + " (" +
                std::to_string(s.observations.size()) + " observations, " +
                std::to_string(pending_units(s)) + " pending)");
      sessions.emplace(app, std::move(s));
    }
  }
};

Server::Server(BusPtr bus, StoragePtr storage, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->bus = std::move(bus);
  impl_->storage = std::move(storage);
  impl_->options = options;
}

Server::~Server() { stop(); }

void Server::start() {
  impl_->sub = impl_->bus->subscribe({"margot/+/welcome/+", "margot/+/info_reply/+",
                                      "margot/+/observation/+", "margot/+/bye/+"});
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->recover();
  }
  impl_->loop = std::thread([impl = impl_.get()] { impl->run_loop(); });
}

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  if (impl_->sub) impl_->sub->close();
  if (impl_->loop.joinable()) impl_->loop.join();
  // drain any pipeline still running so its result is not lost silently
  std::lock_guard<std::mutex> lock(impl_->mu);
  for (auto& [app, s] : impl_->sessions)
    if (s.pipeline_running) {
      s.pipeline_running = false;
      impl_->apply_pipeline(app, s, s.pipeline.get());
    }
}

std::optional<Server::AppStatus> Server::app_status(const std::string& app) const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  const auto it = impl_->sessions.find(app);
  if (it == impl_->sessions.end()) return std::nullopt;
  const auto& s = it->second;
  AppStatus status;
  status.phase = s.phase;
  status.iteration = s.iteration;
  status.pending_evaluations = impl_->pending_units(s);
  status.observations = s.observations.size();
  status.live_clients = s.clients.size();
  status.has_knowledge = s.knowledge.has_value();
  status.knowledge_payload = s.knowledge_payload;
  status.first_hello = s.first_hello;
  status.explore_done = s.explore_done;
  status.knowledge_ready = s.knowledge_ready;
  return status;
}

std::vector<std::string> Server::known_apps() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::vector<std::string> apps;
  for (const auto& [app, s] : impl_->sessions) apps.push_back(app);
  return apps;
}

bool Server::wait_for_phase(const std::string& app, Phase phase,
                            std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lock(impl_->mu);
  return impl_->phase_cv.wait_for(lock, timeout, [&] {
    const auto it = impl_->sessions.find(app);
    return it != impl_->sessions.end() &&
           phase_rank(it->second.phase) >= phase_rank(phase);
  });
}

}  // namespace otto
