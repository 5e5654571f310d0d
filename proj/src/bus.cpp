/*
 * bus.cpp
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

#include "otto/bus.hpp"

#include <algorithm>

namespace otto {

std::optional<Message> Subscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  Message msg = std::move(queue_.front());
  queue_.pop_front();
  return msg;
}

void Subscription::close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Subscription::closed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return closed_;
}

void Subscription::push(const Message& msg) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;
    queue_.push_back(msg);
  }
  cv_.notify_one();
}

SubscriptionPtr InProcessBus::subscribe(const std::vector<std::string>& patterns) {
  auto sub = std::make_shared<Subscription>();
  sub->patterns_ = patterns;
  std::lock_guard<std::mutex> lock(mu_);
  subs_.push_back(sub);
  return sub;
}

bool InProcessBus::publish(const Message& msg) {
  // The registry lock spans all deliveries, giving every subscriber the same
  // total order of messages.
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& weak : subs_) {
    auto sub = weak.lock();
    if (!sub || sub->closed()) continue;
    const bool match = std::any_of(
        sub->patterns().begin(), sub->patterns().end(),
        [&](const std::string& p) { return topic_matches(p, msg.topic); });
    if (match) sub->push(msg);
  }
  return true;
}

void InProcessBus::prune() {
  std::lock_guard<std::mutex> lock(mu_);
  subs_.erase(std::remove_if(subs_.begin(), subs_.end(),
                             [](const std::weak_ptr<Subscription>& w) {
                               auto s = w.lock();
                               return !s || s->closed();
                             }),
              subs_.end());
}

}  // namespace otto
