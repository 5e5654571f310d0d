/*
 * tcp.hpp
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

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "otto/bus.hpp"

namespace otto {

inline constexpr std::uint16_t kDefaultPort = 1887;

/// Exposes an InProcessBus over TCP. Remote peers send ordinary frames;
/// a frame with the reserved topic "$sub" (payload = one pattern per line)
/// registers the connection's subscriptions. Every other inbound frame is
/// published onto the bus; bus traffic matching a connection's patterns is
/// forwarded to it.
class TcpGateway {
 public:
  TcpGateway(std::shared_ptr<InProcessBus> bus, std::uint16_t port);
  ~TcpGateway();

  TcpGateway(const TcpGateway&) = delete;
  TcpGateway& operator=(const TcpGateway&) = delete;

  /// The bound port (useful with port 0 = ephemeral).
  std::uint16_t port() const { return port_; }

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

/// Bus implementation over a remote gateway. Reconnects in the background
/// with exponential backoff and replays its subscriptions on reconnect;
/// publish returns false while disconnected.
class TcpBus : public Bus {
 public:
  /// address: "host:port" or "tcp://host:port"; port defaults to 1887.
  explicit TcpBus(const std::string& address);
  ~TcpBus() override;

  using Bus::subscribe;
  SubscriptionPtr subscribe(const std::vector<std::string>& patterns) override;
  bool publish(const Message& msg) override;

  bool connected() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port" / "tcp://host:port"; empty host becomes "127.0.0.1".
std::pair<std::string, std::uint16_t> parse_broker_address(const std::string& address);

}  // namespace otto
