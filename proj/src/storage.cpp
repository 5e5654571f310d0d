/*
 * storage.cpp
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

#include "otto/storage.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "otto/log.hpp"

namespace fs = std::filesystem;

namespace otto {

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void append_lines(const fs::path& path, const std::string& header,
                  const std::vector<std::string>& rows) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("storage: cannot open " + path.string());
  if (fresh) out << header << '\n';
  for (const auto& row : rows) out << row << '\n';
  out.flush();
  if (!out) throw Error("storage: write failed on " + path.string());
}

void write_whole(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("storage: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("storage: write failed on " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

CsvStorage::CsvStorage(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string CsvStorage::app_dir(const std::string& app, bool create) {
  const fs::path p = fs::path(dir_) / app;
  if (create) fs::create_directories(p);
  return p.string();
}

void CsvStorage::write_description(const std::string& app, const std::string& json) {
  write_whole(fs::path(app_dir(app, true)) / "description.json", json);
}

std::optional<std::string> CsvStorage::read_description(const std::string& app) {
  const fs::path p = fs::path(dir_) / app / "description.json";
  std::ifstream in(p);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void CsvStorage::append_doe(const std::string& app, const ApplicationDescription& desc,
                            const std::vector<csv::DoeRow>& rows) {
  csv::DoeCodec codec(desc);
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& row : rows) lines.push_back(codec.encode(row));
  append_lines(fs::path(app_dir(app, true)) / "doe.csv", codec.header(), lines);
}

std::vector<csv::DoeRow> CsvStorage::read_doe(const std::string& app,
                                              const ApplicationDescription& desc,
                                              std::size_t* corrupted) {
  csv::DoeCodec codec(desc);
  std::vector<csv::DoeRow> rows;
  std::size_t bad = 0;
  const auto lines = read_lines(fs::path(dir_) / app / "doe.csv");
  for (std::size_t i = 1; i < lines.size(); ++i) {  // skip header
    if (lines[i].empty()) continue;
    try {
      rows.push_back(codec.decode(lines[i]));
    } catch (const std::exception& e) {
      ++bad;
      log::warn(app + "/doe.csv line " + std::to_string(i + 1) + " skipped: " + e.what());
    }
  }
  if (corrupted) *corrupted = bad;
  return rows;
}

void CsvStorage::append_observation(const std::string& app, const ApplicationDescription& desc,
                                    const Observation& obs) {
  csv::ObservationCodec codec(desc);
  append_lines(fs::path(app_dir(app, true)) / "observations.csv", codec.header(),
               {codec.encode(obs)});
}

std::vector<Observation> CsvStorage::read_observations(const std::string& app,
                                                       const ApplicationDescription& desc,
                                                       std::size_t* corrupted) {
  csv::ObservationCodec codec(desc);
  std::vector<Observation> rows;
  std::size_t bad = 0;
  const auto lines = read_lines(fs::path(dir_) / app / "observations.csv");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      rows.push_back(codec.decode(lines[i]));
    } catch (const std::exception& e) {
      ++bad;
      log::warn(app + "/observations.csv line " + std::to_string(i + 1) +
                " skipped: " + e.what());
    }
  }
  if (corrupted) *corrupted = bad;
  return rows;
}

void CsvStorage::write_knowledge(const std::string& app, const ApplicationDescription& desc,
                                 const KnowledgeBase& kb) {
  const fs::path dir = app_dir(app, true);
  {
    csv::OperatingPointCodec codec(desc);
    std::string content = codec.header() + "\n";
    for (const auto& op : kb.ops) content += codec.encode(op) + "\n";
    write_whole(dir / "knowledge.csv", content);
  }
  {
    csv::CentroidCodec codec(desc);
    std::string content = codec.header() + "\n";
    for (const auto& c : kb.centroids) content += codec.encode(c) + "\n";
    write_whole(dir / "clusters.csv", content);
  }
  {
    std::string content = "efp,family,signed_r2,mae_adj\n";
    for (const auto& t : kb.model_tags)
      content += t.efp + "," + t.family + "," + csv::format_double(t.signed_r2) + "," +
                 csv::format_double(t.mae_adj) + "\n";
    write_whole(dir / "tags.csv", content);
  }
}

std::optional<KnowledgeBase> CsvStorage::read_knowledge(const std::string& app,
                                                        const ApplicationDescription& desc) {
  const fs::path dir = fs::path(dir_) / app;
  if (!fs::exists(dir / "knowledge.csv")) return std::nullopt;
  KnowledgeBase kb;
  {
    csv::OperatingPointCodec codec(desc);
    const auto lines = read_lines(dir / "knowledge.csv");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      kb.ops.push_back(codec.decode(lines[i]));
    }
  }
  {
    csv::CentroidCodec codec(desc);
    const auto lines = read_lines(dir / "clusters.csv");
    // A featureless app's centroid encodes as a blank row, so blank lines
    // are data there, not padding.
    const bool dimensionless = desc.features.empty();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty() && !dimensionless) continue;
      kb.centroids.push_back(codec.decode(lines[i]));
    }
  }
  {
    const auto lines = read_lines(dir / "tags.csv");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto fields = csv::split_line(lines[i]);
      csv::expect_columns(fields, 4);
      ModelTag tag;
      tag.efp = fields[0];
      tag.family = fields[1];
      tag.signed_r2 = csv::parse_double(fields[2], 3);
      tag.mae_adj = csv::parse_double(fields[3], 4);
      kb.model_tags.push_back(std::move(tag));
    }
  }
  if (kb.ops.empty()) return std::nullopt;
  return kb;
}

void CsvStorage::write_report(const std::string& app, const std::vector<csv::ReportRow>& rows) {
  std::string content = csv::report_header() + "\n";
  for (const auto& row : rows) content += csv::encode_report_row(row) + "\n";
  write_whole(fs::path(app_dir(app, true)) / "report.csv", content);
}

void CsvStorage::write_meta(const std::string& app, int iteration) {
  nlohmann::json j;
  j["iteration"] = iteration;
  write_whole(fs::path(app_dir(app, true)) / "meta.json", j.dump());
}

std::optional<int> CsvStorage::read_meta(const std::string& app) {
  const fs::path p = fs::path(dir_) / app / "meta.json";
  std::ifstream in(p);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    return j.at("iteration").get<int>();
  } catch (const std::exception& e) {
    log::warn(app + "/meta.json unreadable: " + e.what());
    return std::nullopt;
  }
}

std::vector<std::string> CsvStorage::list_apps() {
  std::vector<std::string> apps;
  if (!fs::exists(dir_)) return apps;
  for (const auto& entry : fs::directory_iterator(dir_))
    if (entry.is_directory()) apps.push_back(entry.path().filename().string());
  std::sort(apps.begin(), apps.end());
  return apps;
}

}  // namespace otto
