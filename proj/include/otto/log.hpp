/*
 * log.hpp
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
#include <cstdio>
#include <ctime>
#include <mutex>
#include <string>

#include "otto/types.hpp"

namespace otto::log {

enum class Level : int { error = 0, warn = 1, info = 2, debug = 3 };

inline std::atomic<int>& level_ref() {
  static std::atomic<int> level{static_cast<int>(Level::warn)};
  return level;
}

inline void set_level(Level l) { level_ref().store(static_cast<int>(l)); }

inline Level level_from_string(const std::string& s) {
  if (s == "error") return Level::error;
  if (s == "warn" || s == "warning") return Level::warn;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  throw Error("unknown log level '" + s + "'");
}

inline void write(Level l, const std::string& msg) {
  if (static_cast<int>(l) > level_ref().load(std::memory_order_relaxed)) return;
  static std::mutex mu;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::timespec ts{};
  std::timespec_get(&ts, TIME_UTC);
  std::tm tm{};
  gmtime_r(&ts.tv_sec, &tm);
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%02d:%02d:%02d.%03ld", tm.tm_hour, tm.tm_min, tm.tm_sec,
                ts.tv_nsec / 1000000);
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[%s] %-5s %s\n", stamp, names[static_cast<int>(l)], msg.c_str());
}

inline void error(const std::string& msg) { write(Level::error, msg); }
inline void warn(const std::string& msg) { write(Level::warn, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

}  // namespace otto::log
