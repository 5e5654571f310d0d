/*
 * message.hpp
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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "otto/types.hpp"

namespace otto {

/// Hard cap on a single payload.
inline constexpr std::size_t kMaxPayloadBytes = 16u * 1024u * 1024u;

/// Application topics follow `margot/<app>/<channel>[/<client_id>]`.
struct Message {
  std::string topic;
  std::string payload;

  bool operator==(const Message& other) const = default;
};

/// Channel names of the workflow, one payload schema each.
namespace channel {
inline constexpr const char* welcome = "welcome";          // hello + heartbeats
inline constexpr const char* info_request = "info_request";
inline constexpr const char* info_reply = "info_reply";    // description JSON
inline constexpr const char* explore = "explore";          // design rows
inline constexpr const char* observation = "observation";  // one measured row
inline constexpr const char* knowledge = "knowledge";      // operating-point list
inline constexpr const char* bye = "bye";
inline constexpr const char* error = "error";              // session abort broadcast
}  // namespace channel

/// Wire format: 4-byte big-endian topic length, topic bytes, 4-byte
/// big-endian payload length, payload bytes.
std::string encode_message(const Message& msg);

/// Incremental decode from the front of `buffer`. Returns the message and
/// sets `consumed` when a complete frame is present; returns nullopt (and
/// consumed = 0) while the frame is still incomplete. Throws on oversize or
/// otherwise malformed frames.
std::optional<Message> decode_message(const std::string& buffer, std::size_t& consumed);

/// Single-level wildcard match: '+' matches exactly one topic segment.
bool topic_matches(const std::string& pattern, const std::string& topic);

struct TopicParts {
  std::string app;
  std::string channel;
  std::string client_id;  ///< empty on 3-segment topics
};

/// Splits `margot/<app>/<channel>[/<client_id>]`; nullopt on anything else.
std::optional<TopicParts> parse_topic(const std::string& topic);

std::string make_topic(const std::string& app, const std::string& channel,
                       const std::string& client_id = "");

/// Payloads are text: one schema-version line, then the schema's lines.
std::string build_payload(const std::string& schema, const std::vector<std::string>& lines);

struct ParsedPayload {
  std::string schema;
  std::vector<std::string> lines;
};

/// Splits a payload; throws on an empty payload or mismatched expectations.
ParsedPayload parse_payload(const std::string& payload);

/// Schema-version identifiers.
namespace schema {
inline constexpr const char* hello = "otto.hello.v1";          // line: "hello" | "heartbeat"
inline constexpr const char* info_request = "otto.info_request.v1";
inline constexpr const char* description = "otto.description.v1";  // line: JSON
inline constexpr const char* explore = "otto.explore.v1";      // doe.csv header + rows
inline constexpr const char* observation = "otto.observation.v1";
inline constexpr const char* knowledge = "otto.knowledge.v1";  // sectioned, see below
inline constexpr const char* bye = "otto.bye.v1";
inline constexpr const char* error = "otto.error.v1";          // line: reason
}  // namespace schema

/// The knowledge payload carries three sections:
///   centroids <count>   then clusters.csv header + rows
///   ops <count>         then knowledge.csv header + rows
///   tags <count>        then "efp,family,signed_r2,mae_adj" header + rows
std::string build_knowledge_payload(const ApplicationDescription& desc, const KnowledgeBase& kb);
KnowledgeBase parse_knowledge_payload(const ApplicationDescription& desc,
                                      const std::string& payload);

}  // namespace otto
