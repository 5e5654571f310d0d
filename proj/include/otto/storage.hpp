/*
 * storage.hpp
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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otto/csv.hpp"
#include "otto/types.hpp"

namespace otto {

/// Per-application persistence used by the server. Appends are flushed
/// before returning so a server crash never loses acknowledged rows.
/// Readers skip corrupted rows and report how many were skipped.
class StorageBackend {
 public:
  virtual ~StorageBackend() = default;

  virtual void write_description(const std::string& app, const std::string& json) = 0;
  virtual std::optional<std::string> read_description(const std::string& app) = 0;

  /// Appends design rows (the file accumulates batches across iterations).
  virtual void append_doe(const std::string& app, const ApplicationDescription& desc,
                          const std::vector<csv::DoeRow>& rows) = 0;
  virtual std::vector<csv::DoeRow> read_doe(const std::string& app,
                                            const ApplicationDescription& desc,
                                            std::size_t* corrupted = nullptr) = 0;

  virtual void append_observation(const std::string& app, const ApplicationDescription& desc,
                                  const Observation& obs) = 0;
  virtual std::vector<Observation> read_observations(const std::string& app,
                                                     const ApplicationDescription& desc,
                                                     std::size_t* corrupted = nullptr) = 0;

  virtual void write_knowledge(const std::string& app, const ApplicationDescription& desc,
                               const KnowledgeBase& kb) = 0;
  virtual std::optional<KnowledgeBase> read_knowledge(const std::string& app,
                                                      const ApplicationDescription& desc) = 0;

  virtual void write_report(const std::string& app, const std::vector<csv::ReportRow>& rows) = 0;

  /// Small JSON sidecar holding the DSE iteration counter.
  virtual void write_meta(const std::string& app, int iteration) = 0;
  virtual std::optional<int> read_meta(const std::string& app) = 0;

  virtual std::vector<std::string> list_apps() = 0;
};

using StoragePtr = std::shared_ptr<StorageBackend>;

/// CSV files under `<dir>/<app>/`: doe.csv, observations.csv, clusters.csv,
/// knowledge.csv, report.csv, plus description.json and meta.json sidecars.
class CsvStorage : public StorageBackend {
 public:
  explicit CsvStorage(std::string dir);

  void write_description(const std::string& app, const std::string& json) override;
  std::optional<std::string> read_description(const std::string& app) override;
  void append_doe(const std::string& app, const ApplicationDescription& desc,
                  const std::vector<csv::DoeRow>& rows) override;
  std::vector<csv::DoeRow> read_doe(const std::string& app, const ApplicationDescription& desc,
                                    std::size_t* corrupted = nullptr) override;
  void append_observation(const std::string& app, const ApplicationDescription& desc,
                          const Observation& obs) override;
  std::vector<Observation> read_observations(const std::string& app,
                                             const ApplicationDescription& desc,
                                             std::size_t* corrupted = nullptr) override;
  void write_knowledge(const std::string& app, const ApplicationDescription& desc,
                       const KnowledgeBase& kb) override;
  std::optional<KnowledgeBase> read_knowledge(const std::string& app,
                                              const ApplicationDescription& desc) override;
  void write_report(const std::string& app, const std::vector<csv::ReportRow>& rows) override;
  void write_meta(const std::string& app, int iteration) override;
  std::optional<int> read_meta(const std::string& app) override;
  std::vector<std::string> list_apps() override;

  const std::string& dir() const { return dir_; }

 private:
  std::string app_dir(const std::string& app, bool create);
  std::string dir_;
};

}  // namespace otto
