/*
 * bus.hpp
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
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "otto/message.hpp"

namespace otto {

/// A live subscription: a queue fed by the broker, drained by one consumer.
class Subscription {
 public:
  Subscription() = default;

  /// Blocks up to `timeout` for the next message; nullopt on timeout or
  /// after close().
  std::optional<Message> pop(std::chrono::milliseconds timeout);

  /// Unblocks consumers; subsequent pops return nullopt immediately.
  void close();

  bool closed() const;

  /// Broker-side delivery.
  void push(const Message& msg);

  const std::vector<std::string>& patterns() const { return patterns_; }

 private:
  friend class InProcessBus;
  friend class TcpBus;
  std::vector<std::string> patterns_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> queue_;
  bool closed_ = false;
};

using SubscriptionPtr = std::shared_ptr<Subscription>;

/// Publish/subscribe transport. Implementations: InProcessBus (broker and
/// transport in one) and TcpBus (remote broker over the framed protocol).
class Bus {
 public:
  virtual ~Bus() = default;

  /// One subscription may watch several patterns; messages matching any of
  /// them land in its queue exactly once.
  virtual SubscriptionPtr subscribe(const std::vector<std::string>& patterns) = 0;
  SubscriptionPtr subscribe(const std::string& pattern) {
    return subscribe(std::vector<std::string>{pattern});
  }

  /// False when the transport cannot currently deliver (disconnected).
  virtual bool publish(const Message& msg) = 0;
};

using BusPtr = std::shared_ptr<Bus>;

/// The minimal broker: per-subscription queues, wildcard matching, total
/// publish order (one registry lock), at-least-once within the process.
class InProcessBus : public Bus {
 public:
  using Bus::subscribe;
  SubscriptionPtr subscribe(const std::vector<std::string>& patterns) override;
  bool publish(const Message& msg) override;

  /// Drops closed subscriptions from the registry (housekeeping).
  void prune();

 private:
  std::mutex mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
};

}  // namespace otto
