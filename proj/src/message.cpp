/*
 * message.cpp
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

#include "otto/message.hpp"

#include <cstdint>
#include <sstream>

#include "otto/csv.hpp"

namespace otto {

namespace {

constexpr std::size_t kMaxTopicBytes = 64 * 1024;

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t get_be32(const std::string& buf, std::size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 3]));
}

std::vector<std::string> split_segments(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = s.find('/', start);
    if (slash == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, slash - start));
    start = slash + 1;
  }
}

}  // namespace

std::string encode_message(const Message& msg) {
  if (msg.topic.empty()) throw Error("encode: empty topic");
  if (msg.topic.size() > kMaxTopicBytes) throw Error("encode: topic too long");
  if (msg.payload.size() > kMaxPayloadBytes) throw Error("encode: payload beyond 16 MiB");
  std::string out;
  out.reserve(8 + msg.topic.size() + msg.payload.size());
  put_be32(out, static_cast<std::uint32_t>(msg.topic.size()));
  out += msg.topic;
  put_be32(out, static_cast<std::uint32_t>(msg.payload.size()));
  out += msg.payload;
  return out;
}

std::optional<Message> decode_message(const std::string& buffer, std::size_t& consumed) {
  consumed = 0;
  if (buffer.size() < 4) return std::nullopt;
  const std::uint32_t topic_len = get_be32(buffer, 0);
  if (topic_len == 0) throw Error("decode: empty topic");
  if (topic_len > kMaxTopicBytes) throw Error("decode: topic length beyond limit");
  if (buffer.size() < 4 + static_cast<std::size_t>(topic_len) + 4) return std::nullopt;
  const std::uint32_t payload_len = get_be32(buffer, 4 + topic_len);
  if (payload_len > kMaxPayloadBytes) throw Error("decode: payload beyond 16 MiB");
  const std::size_t total = 8 + static_cast<std::size_t>(topic_len) + payload_len;
  if (buffer.size() < total) return std::nullopt;
  Message msg;
  msg.topic = buffer.substr(4, topic_len);
  msg.payload = buffer.substr(8 + topic_len, payload_len);
  consumed = total;
  return msg;
}

bool topic_matches(const std::string& pattern, const std::string& topic) {
  const auto ps = split_segments(pattern);
  const auto ts = split_segments(topic);
  if (ps.size() != ts.size()) return false;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i] != "+" && ps[i] != ts[i]) return false;
  return true;
}

std::optional<TopicParts> parse_topic(const std::string& topic) {
  const auto segs = split_segments(topic);
  if (segs.size() != 3 && segs.size() != 4) return std::nullopt;
  if (segs[0] != "margot") return std::nullopt;
  for (const auto& s : segs)
    if (s.empty()) return std::nullopt;
  TopicParts parts;
  parts.app = segs[1];
  parts.channel = segs[2];
  if (segs.size() == 4) parts.client_id = segs[3];
  return parts;
}

std::string make_topic(const std::string& app, const std::string& channel,
                       const std::string& client_id) {
  std::string t = "margot/" + app + "/" + channel;
  if (!client_id.empty()) t += "/" + client_id;
  return t;
}

std::string build_payload(const std::string& schema, const std::vector<std::string>& lines) {
  std::string out = schema;
  for (const auto& line : lines) {
    out += '\n';
    out += line;
  }
  return out;
}

ParsedPayload parse_payload(const std::string& payload) {
  if (payload.empty()) throw Error("payload: empty");
  ParsedPayload out;
  std::size_t start = 0;
  bool first = true;
  while (start <= payload.size()) {
    std::size_t nl = payload.find('\n', start);
    const std::string line =
        nl == std::string::npos ? payload.substr(start) : payload.substr(start, nl - start);
    if (first) {
      out.schema = line;
      first = false;
    } else {
      out.lines.push_back(line);
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  if (out.schema.rfind("otto.", 0) != 0) throw Error("payload: missing schema line");
  return out;
}

std::string build_knowledge_payload(const ApplicationDescription& desc,
                                    const KnowledgeBase& kb) {
  csv::CentroidCodec centroid_codec(desc);
  csv::OperatingPointCodec op_codec(desc);
  std::vector<std::string> lines;
  lines.reserve(kb.ops.size() + kb.centroids.size() + kb.model_tags.size() + 6);

  lines.push_back("centroids " + std::to_string(kb.centroids.size()));
  lines.push_back(centroid_codec.header());
  for (const auto& c : kb.centroids) lines.push_back(centroid_codec.encode(c));

  lines.push_back("ops " + std::to_string(kb.ops.size()));
  lines.push_back(op_codec.header());
  for (const auto& op : kb.ops) lines.push_back(op_codec.encode(op));

  lines.push_back("tags " + std::to_string(kb.model_tags.size()));
  lines.push_back("efp,family,signed_r2,mae_adj");
  for (const auto& t : kb.model_tags)
    lines.push_back(t.efp + "," + t.family + "," + csv::format_double(t.signed_r2) + "," +
                    csv::format_double(t.mae_adj));

  const std::string payload = build_payload(schema::knowledge, lines);
  if (payload.size() > kMaxPayloadBytes)
    throw Error("knowledge payload beyond 16 MiB; reduce the design space or centroids");
  return payload;
}

KnowledgeBase parse_knowledge_payload(const ApplicationDescription& desc,
                                      const std::string& payload) {
  const ParsedPayload parsed = parse_payload(payload);
  if (parsed.schema != schema::knowledge)
    throw Error("knowledge payload: unexpected schema '" + parsed.schema + "'");

  csv::CentroidCodec centroid_codec(desc);
  csv::OperatingPointCodec op_codec(desc);
  KnowledgeBase kb;

  std::size_t at = 0;
  auto next_line = [&]() -> const std::string& {
    if (at >= parsed.lines.size()) throw Error("knowledge payload: truncated");
    return parsed.lines[at++];
  };
  auto read_count = [&](const std::string& section) -> std::size_t {
    const std::string& line = next_line();
    if (line.rfind(section + " ", 0) != 0)
      throw Error("knowledge payload: expected section '" + section + "'");
    const std::string count = line.substr(section.size() + 1);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(count.c_str(), &end, 10);
    if (end == count.c_str() || *end != '\0')
      throw Error("knowledge payload: bad count in section '" + section + "'");
    return static_cast<std::size_t>(v);
  };

  const std::size_t n_centroids = read_count("centroids");
  next_line();  // header
  for (std::size_t i = 0; i < n_centroids; ++i)
    kb.centroids.push_back(centroid_codec.decode(next_line()));

  const std::size_t n_ops = read_count("ops");
  next_line();  // header
  kb.ops.reserve(n_ops);
  for (std::size_t i = 0; i < n_ops; ++i) kb.ops.push_back(op_codec.decode(next_line()));

  const std::size_t n_tags = read_count("tags");
  next_line();  // header
  for (std::size_t i = 0; i < n_tags; ++i) {
    const auto fields = csv::split_line(next_line());
    csv::expect_columns(fields, 4);
    ModelTag tag;
    tag.efp = fields[0];
    tag.family = fields[1];
    tag.signed_r2 = csv::parse_double(fields[2], 3);
    tag.mae_adj = csv::parse_double(fields[3], 4);
    kb.model_tags.push_back(std::move(tag));
  }
  return kb;
}

}  // namespace otto
