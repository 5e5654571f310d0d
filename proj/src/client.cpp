/*
 * client.cpp
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

#include "otto/client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include "otto/clustering.hpp"
#include "otto/csv.hpp"
#include "otto/doe.hpp"
#include "otto/log.hpp"
#include "otto/message.hpp"

namespace otto {

namespace {

bool satisfies(const Requirements::Constraint& c, const EfpVector& efps) {
  const double v = efps[static_cast<std::size_t>(c.efp)];
  return c.is_upper ? v <= c.threshold : v >= c.threshold;
}

std::int64_t now_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

OperatingPoint select_op(const KnowledgeBase& kb, const Requirements& reqs,
                         const FeatureVector& features,
                         const std::vector<double>& corrections) {
  if (kb.ops.empty()) throw Error("select_op: empty knowledge");

  // Proactive filter: only the nearest centroid's block competes. Each op
  // carries its centroid verbatim, which survives the CSV round-trip exactly,
  // so equality is the robust block membership test.
  std::vector<std::size_t> candidates;
  if (kb.centroids.size() > 1) {
    const std::size_t c = nearest_centroid(features, kb.centroids);
    const FeatureVector& target = kb.centroids[c];
    for (std::size_t i = 0; i < kb.ops.size(); ++i)
      if (kb.ops[i].features == target) candidates.push_back(i);
  }
  if (candidates.empty())
    for (std::size_t i = 0; i < kb.ops.size(); ++i) candidates.push_back(i);

  std::vector<EfpVector> corrected(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    EfpVector e = kb.ops[candidates[i]].expected;
    for (std::size_t j = 0; j < e.size() && j < corrections.size(); ++j)
      e[j] *= corrections[j];
    corrected[i] = std::move(e);
  }

  // Constraints sorted by priority, highest first; relax from the back.
  std::vector<Requirements::Constraint> active = reqs.constraints;
  std::sort(active.begin(), active.end(),
            [](const auto& a, const auto& b) { return a.priority > b.priority; });

  std::vector<std::size_t> feasible;
  while (true) {
    feasible.clear();
    for (std::size_t i = 0; i < corrected.size(); ++i) {
      const bool ok = std::all_of(active.begin(), active.end(), [&](const auto& c) {
        return satisfies(c, corrected[i]);
      });
      if (ok) feasible.push_back(i);
    }
    if (!feasible.empty() || active.empty()) break;
    active.pop_back();  // drop the lowest-priority constraint
  }
  if (feasible.empty())
    for (std::size_t i = 0; i < corrected.size(); ++i) feasible.push_back(i);

  const std::size_t rank = static_cast<std::size_t>(reqs.rank_efp);
  std::size_t best = feasible.front();
  for (const std::size_t i : feasible) {
    const double vi = corrected[i][rank], vb = corrected[best][rank];
    const bool better = reqs.maximize ? vi > vb : vi < vb;
    if (better)
      best = i;
    else if (vi == vb && kb.ops[candidates[i]].config < kb.ops[candidates[best]].config)
      best = i;
  }
  return kb.ops[candidates[best]];
}

MonitorWindow::MonitorWindow(std::size_t n_efps, std::size_t capacity)
    : capacity_(capacity), rings_(n_efps) {}

void MonitorWindow::add(const EfpVector& observed, const EfpVector& expected) {
  for (std::size_t e = 0; e < rings_.size() && e < observed.size() && e < expected.size();
       ++e) {
    auto& ring = rings_[e];
    if (ring.pairs.size() < capacity_) {
      ring.pairs.emplace_back(observed[e], expected[e]);
    } else {
      ring.pairs[ring.next] = {observed[e], expected[e]};
      ring.full = true;
    }
    ring.next = (ring.next + 1) % capacity_;
  }
}

std::vector<double> MonitorWindow::correction_factors() const {
  std::vector<double> factors(rings_.size(), 1.0);
  for (std::size_t e = 0; e < rings_.size(); ++e) {
    const auto& ring = rings_[e];
    if (ring.pairs.empty()) continue;
    double obs = 0.0, exp = 0.0;
    for (const auto& [o, x] : ring.pairs) {
      obs += o;
      exp += x;
    }
    if (exp != 0.0) factors[e] = obs / exp;
  }
  return factors;
}

struct Client::Impl {
  BusPtr bus;
  std::string app;
  std::function<ApplicationDescription()> desc_provider;
  ClientOptions options;

  SubscriptionPtr sub;
  std::thread service;
  std::atomic<bool> stopping{false};
  std::atomic<bool> started{false};

  mutable std::mutex mu;
  std::optional<ApplicationDescription> desc;   // cached from the provider
  std::deque<csv::DoeRow> assignment;           // replace semantics
  std::optional<KnobConfig> last_assigned;
  std::optional<KnobConfig> fallback;
  std::shared_ptr<const KnowledgeBase> knowledge;  // atomic snapshot under mu
  std::string knowledge_bytes;
  Requirements requirements;
  std::unique_ptr<MonitorWindow> window;
  std::deque<std::string> unsent;               // encoded observation payloads
  bool session_error = false;
  std::int64_t last_timestamp = 0;              // keeps observation keys unique

  const ApplicationDescription& description() {
    if (!desc) {
      desc = desc_provider();
      const auto problems = validate_description(*desc);
      if (!problems.empty()) throw Error("invalid description: " + problems.front());
      window = std::make_unique<MonitorWindow>(desc->efps.size());
    }
    return *desc;
  }

  KnobConfig default_config() {
    if (!fallback) {
      const auto& d = description();
      auto grid = full_factorial(d.knobs);
      grid = apply_restrictions(grid, Restriction::compile(d.doe_params.restriction, d.knobs));
      fallback = grid.front();  // lexicographically first valid config
    }
    return *fallback;
  }

  void publish_or_buffer(const std::string& topic, const std::string& payload) {
    if (bus->publish(Message{topic, payload})) return;
    if (unsent.size() >= options.publish_buffer_cap) unsent.pop_front();
    unsent.push_back(payload);
  }

  void flush_unsent() {
    std::lock_guard<std::mutex> lock(mu);
    while (!unsent.empty()) {
      if (!bus->publish(
              Message{make_topic(app, channel::observation, options.client_id),
                      unsent.front()}))
        return;
      unsent.pop_front();
    }
  }

  // -- service thread ---------------------------------------------------------

  void handle(const Message& msg) {
    const auto parts = parse_topic(msg.topic);
    if (!parts) return;
    if (parts->channel == channel::info_request) {
      std::string json;
      try {
        std::lock_guard<std::mutex> lock(mu);
        json = description().to_json();
      } catch (const std::exception& e) {
        log::error(app + ": description provider failed: " + e.what());
        return;
      }
      bus->publish(Message{make_topic(app, channel::info_reply, options.client_id),
                           build_payload(schema::description, {json})});
    } else if (parts->channel == channel::explore) {
      try {
        std::lock_guard<std::mutex> lock(mu);
        csv::DoeCodec codec(description());
        const auto parsed = parse_payload(msg.payload);
        if (parsed.schema != schema::explore) throw Error("unexpected schema");
        std::deque<csv::DoeRow> fresh;
        for (std::size_t i = 1; i < parsed.lines.size(); ++i) {  // line 0: header
          if (parsed.lines[i].empty()) continue;
          fresh.push_back(codec.decode(parsed.lines[i]));
        }
        assignment = std::move(fresh);  // replace, not append
        log::debug(app + "/" + options.client_id + ": assignment of " +
                   std::to_string(assignment.size()) + " rows installed");
      } catch (const std::exception& e) {
        log::warn(app + ": bad explore payload: " + e.what());
      }
    } else if (parts->channel == channel::knowledge) {
      try {
        std::lock_guard<std::mutex> lock(mu);
        auto kb = std::make_shared<KnowledgeBase>(
            parse_knowledge_payload(description(), msg.payload));
        knowledge = std::move(kb);  // atomic snapshot swap
        knowledge_bytes = msg.payload;
        log::info(app + "/" + options.client_id + ": knowledge installed (" +
                  std::to_string(knowledge->ops.size()) + " ops)");
      } catch (const std::exception& e) {
        log::warn(app + ": bad knowledge payload: " + e.what());
      }
    } else if (parts->channel == channel::error) {
      std::string reason = msg.payload;
      try {
        const auto parsed = parse_payload(msg.payload);
        if (!parsed.lines.empty()) reason = parsed.lines.front();
      } catch (const std::exception&) {
      }
      log::error(app + ": server aborted the session: " + reason);
      std::lock_guard<std::mutex> lock(mu);
      session_error = true;
    }
  }

  void run_service() {
    const std::string& id = options.client_id;
    bus->publish(Message{make_topic(app, channel::welcome, id),
                         build_payload(schema::hello, {"hello"})});
    auto last_beat = std::chrono::steady_clock::now();
    const auto beat_period = std::chrono::duration<double>(options.heartbeat_seconds);
    while (!stopping) {
      auto msg = sub->pop(std::chrono::milliseconds(50));
      if (msg) handle(*msg);
      flush_unsent();
      const auto now = std::chrono::steady_clock::now();
      if (now - last_beat > beat_period) {
        bus->publish(Message{make_topic(app, channel::welcome, id),
                             build_payload(schema::hello, {"heartbeat"})});
        last_beat = now;
      }
    }
  }
};

Client::Client(BusPtr bus, std::string app_name,
               std::function<ApplicationDescription()> desc_provider, ClientOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (options.client_id.empty()) throw Error("client: client_id required");
  impl_->bus = std::move(bus);
  impl_->app = std::move(app_name);
  impl_->desc_provider = std::move(desc_provider);
  impl_->options = std::move(options);
}

Client::~Client() { stop(); }

void Client::start() {
  if (impl_->started.exchange(true)) return;
  const std::string& id = impl_->options.client_id;
  impl_->sub = impl_->bus->subscribe(
      {make_topic(impl_->app, channel::info_request, id),
       make_topic(impl_->app, channel::explore, id),
       make_topic(impl_->app, channel::knowledge, id),
       make_topic(impl_->app, channel::knowledge), make_topic(impl_->app, channel::error)});
  impl_->service = std::thread([impl = impl_.get()] { impl->run_service(); });
}

void Client::stop() {
  if (!impl_ || !impl_->started || impl_->stopping.exchange(true)) return;
  impl_->bus->publish(Message{make_topic(impl_->app, channel::bye, impl_->options.client_id),
                              build_payload(schema::bye, {})});
  if (impl_->sub) impl_->sub->close();
  if (impl_->service.joinable()) impl_->service.join();
}

void Client::abandon() {
  if (!impl_ || !impl_->started || impl_->stopping.exchange(true)) return;
  if (impl_->sub) impl_->sub->close();
  if (impl_->service.joinable()) impl_->service.join();
}

KnobConfig Client::get_config(const FeatureVector& features) {
  return get_config_ex(features).first;
}

std::pair<KnobConfig, ConfigSource> Client::get_config_ex(const FeatureVector& features) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  if (!impl_->assignment.empty()) {
    auto& row = impl_->assignment.front();
    KnobConfig config = row.config;
    if (--row.remaining_repetitions <= 0) impl_->assignment.pop_front();
    impl_->last_assigned = config;
    return {std::move(config), ConfigSource::assigned};
  }
  if (impl_->knowledge) {
    const auto op = select_op(*impl_->knowledge, impl_->requirements, features,
                              impl_->window ? impl_->window->correction_factors()
                                            : std::vector<double>{});
    return {op.config, ConfigSource::knowledge};
  }
  if (impl_->last_assigned) return {*impl_->last_assigned, ConfigSource::free_run};
  return {impl_->default_config(), ConfigSource::fallback};
}

void Client::report(const KnobConfig& config, const FeatureVector& features,
                    const EfpVector& metrics) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Observation obs;
  obs.client_id = impl_->options.client_id;
  obs.config = config;
  obs.features = features;
  obs.metrics = metrics;
  obs.timestamp_ms = std::max(now_millis(), impl_->last_timestamp + 1);
  impl_->last_timestamp = obs.timestamp_ms;
  const csv::ObservationCodec codec(impl_->description());
  const std::string payload =
      build_payload(schema::observation, {codec.header(), codec.encode(obs)});
  // reactive feedback: compare against the installed expectation
  if (impl_->knowledge && impl_->window) {
    for (const auto& op : impl_->knowledge->ops)
      if (op.config == config) {
        impl_->window->add(metrics, op.expected);
        break;
      }
  }
  impl_->publish_or_buffer(
      make_topic(impl_->app, channel::observation, impl_->options.client_id), payload);
}

void Client::set_requirements(const Requirements& reqs) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->requirements = reqs;
}

bool Client::has_knowledge() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->knowledge != nullptr;
}

std::string Client::knowledge_payload() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->knowledge_bytes;
}

std::size_t Client::assignments_left() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::size_t left = 0;
  for (const auto& row : impl_->assignment)
    left += static_cast<std::size_t>(row.remaining_repetitions);
  return left;
}

const std::string& Client::client_id() const { return impl_->options.client_id; }

}  // namespace otto
