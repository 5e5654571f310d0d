/*
 * tcp.cpp
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

#include "otto/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <functional>
#include <list>
#include <mutex>

#include "otto/log.hpp"

namespace otto {

namespace {

constexpr const char* kSubTopic = "$sub";

void close_fd(int& fd) {
  if (fd >= 0) {
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    fd = -1;
  }
}

bool send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && (errno == EINTR)) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

int connect_to(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0) return -1;
  int fd = -1;
  for (addrinfo* ai = result; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd >= 0) {
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

/// Reads frames from `fd` into `on_message` until EOF/error.
void read_loop(int fd, const std::function<void(Message)>& on_message) {
  std::string buffer;
  char chunk[16384];
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n == 0) return;
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
    while (true) {
      std::size_t consumed = 0;
      std::optional<Message> msg;
      try {
        msg = decode_message(buffer, consumed);
      } catch (const std::exception& e) {
        log::warn(std::string("dropping connection on malformed frame: ") + e.what());
        return;
      }
      if (!msg) break;
      buffer.erase(0, consumed);
      on_message(std::move(*msg));
    }
  }
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_broker_address(const std::string& address) {
  std::string rest = address;
  const std::string scheme = "tcp://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  std::string host = rest;
  std::uint16_t port = kDefaultPort;
  const std::size_t colon = rest.rfind(':');
  if (colon != std::string::npos) {
    host = rest.substr(0, colon);
    const std::string port_text = rest.substr(colon + 1);
    unsigned value = 0;
    const auto [ptr, ec] =
        std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value == 0 ||
        value > 65535)
      throw Error("bad broker port in '" + address + "'");
    port = static_cast<std::uint16_t>(value);
  }
  if (host.empty()) host = "127.0.0.1";
  return {host, port};
}

// ---------------------------------------------------------------------------
// TcpGateway

struct TcpGateway::Impl {
  std::shared_ptr<InProcessBus> bus;
  int listen_fd = -1;
  std::atomic<bool> stopping{false};
  std::thread accept_thread;

  struct Conn {
    int fd = -1;
    std::thread reader;
    std::thread writer;
    SubscriptionPtr sub;            // bus traffic this connection wants
    std::mutex pattern_mu;
    std::vector<std::string> patterns;
  };
  std::mutex conns_mu;
  std::list<std::shared_ptr<Conn>> conns;

  void run_accept() {
    while (!stopping) {
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) {
        if (stopping) return;
        if (errno == EINTR) continue;
        return;
      }
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      auto conn = std::make_shared<Conn>();
      conn->fd = fd;
      {
        std::lock_guard<std::mutex> lock(conns_mu);
        conns.push_back(conn);
      }
      conn->reader = std::thread([this, conn] { run_conn(conn); });
    }
  }

  void run_conn(const std::shared_ptr<Conn>& conn) {
    read_loop(conn->fd, [this, &conn](Message msg) {
      if (msg.topic == kSubTopic) {
        // (Re)register this connection's subscription patterns and start the
        // forwarding half once.
        std::vector<std::string> patterns;
        std::size_t start = 0;
        while (start <= msg.payload.size()) {
          const std::size_t nl = msg.payload.find('\n', start);
          const std::string line = nl == std::string::npos
                                       ? msg.payload.substr(start)
                                       : msg.payload.substr(start, nl - start);
          if (!line.empty()) patterns.push_back(line);
          if (nl == std::string::npos) break;
          start = nl + 1;
        }
        SubscriptionPtr old;
        {
          std::lock_guard<std::mutex> lock(conn->pattern_mu);
          conn->patterns = patterns;
          old = conn->sub;
          conn->sub = bus->subscribe(patterns);
        }
        if (old) old->close();
        if (!conn->writer.joinable())
          conn->writer = std::thread([this, conn] { run_writer(conn); });
        return;
      }
      bus->publish(msg);
    });
    SubscriptionPtr sub;
    {
      std::lock_guard<std::mutex> lock(conn->pattern_mu);
      sub = conn->sub;
    }
    if (sub) sub->close();
    close_fd(conn->fd);
  }

  void run_writer(const std::shared_ptr<Conn>& conn) {
    while (!stopping) {
      SubscriptionPtr sub;
      {
        std::lock_guard<std::mutex> lock(conn->pattern_mu);
        sub = conn->sub;
      }
      if (!sub) return;
      auto msg = sub->pop(std::chrono::milliseconds(200));
      if (!msg) {
        if (sub->closed()) {
          // a fresh subscription may have replaced this one
          std::lock_guard<std::mutex> lock(conn->pattern_mu);
          if (conn->sub == sub) return;
        }
        continue;
      }
      if (!send_all(conn->fd, encode_message(*msg))) return;
    }
  }

  void stop() {
    if (stopping.exchange(true)) return;
    close_fd(listen_fd);
    if (accept_thread.joinable()) accept_thread.join();
    std::list<std::shared_ptr<Conn>> snapshot;
    {
      std::lock_guard<std::mutex> lock(conns_mu);
      snapshot.swap(conns);
    }
    for (auto& conn : snapshot) {
      SubscriptionPtr sub;
      {
        std::lock_guard<std::mutex> lock(conn->pattern_mu);
        sub = conn->sub;
      }
      if (sub) sub->close();
      close_fd(conn->fd);
      if (conn->reader.joinable()) conn->reader.join();
      if (conn->writer.joinable()) conn->writer.join();
    }
  }
};

TcpGateway::TcpGateway(std::shared_ptr<InProcessBus> bus, std::uint16_t port)
    : impl_(std::make_unique<Impl>()) {
  impl_->bus = std::move(bus);
  impl_->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (impl_->listen_fd < 0) throw Error("gateway: socket() failed");
  const int one = 1;
  ::setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    close_fd(impl_->listen_fd);
    throw Error("gateway: cannot bind port " + std::to_string(port) + ": " +
                std::strerror(errno));
  }
  if (::listen(impl_->listen_fd, 64) != 0) {
    close_fd(impl_->listen_fd);
    throw Error("gateway: listen() failed");
  }
  socklen_t len = sizeof addr;
  ::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  impl_->accept_thread = std::thread([impl = impl_.get()] { impl->run_accept(); });
  log::info("gateway listening on port " + std::to_string(port_));
}

TcpGateway::~TcpGateway() { stop(); }

void TcpGateway::stop() {
  if (impl_) impl_->stop();
}

// ---------------------------------------------------------------------------
// TcpBus

struct TcpBus::Impl {
  std::string host;
  std::uint16_t port = kDefaultPort;

  std::atomic<bool> stopping{false};
  std::atomic<bool> connected{false};
  int fd = -1;
  std::mutex write_mu;   // guards fd writes and replacement
  std::mutex subs_mu;    // guards the subscription registry
  std::vector<std::weak_ptr<Subscription>> subs;
  std::thread io_thread;

  std::string patterns_payload() {
    std::string payload;
    std::lock_guard<std::mutex> lock(subs_mu);
    for (auto& weak : subs) {
      auto sub = weak.lock();
      if (!sub || sub->closed()) continue;
      for (const auto& p : sub->patterns()) {
        if (!payload.empty()) payload += '\n';
        payload += p;
      }
    }
    return payload;
  }

  bool send_frame(const Message& msg) {
    std::lock_guard<std::mutex> lock(write_mu);
    if (fd < 0) return false;
    if (send_all(fd, encode_message(msg))) return true;
    connected = false;
    close_fd(fd);
    return false;
  }

  void deliver(const Message& msg) {
    std::lock_guard<std::mutex> lock(subs_mu);
    for (auto& weak : subs) {
      auto sub = weak.lock();
      if (!sub || sub->closed()) continue;
      const bool match = std::any_of(
          sub->patterns().begin(), sub->patterns().end(),
          [&](const std::string& p) { return topic_matches(p, msg.topic); });
      if (match) sub->push(msg);
    }
  }

  void run_io() {
    double backoff = 0.1;
    while (!stopping) {
      const int new_fd = connect_to(host, port);
      if (new_fd < 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(static_cast<int>(backoff * 1000)));
        backoff = std::min(backoff * 2.0, 2.0);
        continue;
      }
      {
        std::lock_guard<std::mutex> lock(write_mu);
        fd = new_fd;
      }
      backoff = 0.1;
      // replay subscriptions before announcing the connection as usable
      send_frame(Message{kSubTopic, patterns_payload()});
      connected = true;
      log::debug("broker connection up (" + host + ":" + std::to_string(port) + ")");
      read_loop(new_fd, [this](Message msg) { deliver(std::move(msg)); });
      connected = false;
      {
        std::lock_guard<std::mutex> lock(write_mu);
        close_fd(fd);
      }
      if (!stopping) log::warn("broker connection lost; reconnecting");
    }
  }

  void stop() {
    if (stopping.exchange(true)) return;
    connected = false;
    {
      std::lock_guard<std::mutex> lock(write_mu);
      close_fd(fd);
    }
    if (io_thread.joinable()) io_thread.join();
    std::lock_guard<std::mutex> lock(subs_mu);
    for (auto& weak : subs)
      if (auto sub = weak.lock()) sub->close();
  }
};

TcpBus::TcpBus(const std::string& address) : impl_(std::make_unique<Impl>()) {
  const auto [host, port] = parse_broker_address(address);
  impl_->host = host;
  impl_->port = port;
  impl_->io_thread = std::thread([impl = impl_.get()] { impl->run_io(); });
}

TcpBus::~TcpBus() { stop(); }

SubscriptionPtr TcpBus::subscribe(const std::vector<std::string>& patterns) {
  auto sub = std::make_shared<Subscription>();
  sub->patterns_ = patterns;
  {
    std::lock_guard<std::mutex> lock(impl_->subs_mu);
    impl_->subs.push_back(sub);
  }
  // push the updated pattern set to the broker if we are connected
  if (impl_->connected) impl_->send_frame(Message{kSubTopic, impl_->patterns_payload()});
  return sub;
}

bool TcpBus::publish(const Message& msg) {
  if (!impl_->connected) return false;
  return impl_->send_frame(msg);
}

bool TcpBus::connected() const { return impl_->connected; }

void TcpBus::stop() {
  if (impl_) impl_->stop();
}

}  // namespace otto
