/*
 * csv.hpp
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

#include <string>
#include <vector>

#include "otto/types.hpp"

namespace otto::csv {

/// Renders a finite double with 17 significant digits so that decode is a
/// bit-exact inverse (shortest form is not required, exactness is).
std::string format_double(double v);

/// Parses one numeric field; `column` is the 1-based position used in error
/// messages. Throws Error on garbage, trailing characters or non-finite text.
double parse_double(const std::string& field, std::size_t column);

/// Splits a comma-separated line. Fields never contain commas or newlines;
/// identifiers are validated against that when encoding.
std::vector<std::string> split_line(const std::string& line);

std::string join(const std::vector<std::string>& fields);

/// Throws Error when `fields` has a different arity than `expected`; the
/// message names the first offending 1-based column.
void expect_columns(const std::vector<std::string>& fields, std::size_t expected);

/// observations.csv rows: client_id, one column per knob, one per feature,
/// one per EFP, timestamp.
class ObservationCodec {
 public:
  explicit ObservationCodec(const ApplicationDescription& desc);

  std::string header() const;
  std::string encode(const Observation& obs) const;
  Observation decode(const std::string& line) const;
  std::size_t columns() const { return 2 + n_knobs_ + n_features_ + n_efps_; }

 private:
  std::vector<std::string> names_;
  std::size_t n_knobs_;
  std::size_t n_features_;
  std::size_t n_efps_;
};

/// doe.csv rows: one column per knob plus remaining_repetitions.
struct DoeRow {
  KnobConfig config;
  int remaining_repetitions = 1;

  bool operator==(const DoeRow& other) const = default;
};

class DoeCodec {
 public:
  explicit DoeCodec(const ApplicationDescription& desc);

  std::string header() const;
  std::string encode(const DoeRow& row) const;
  DoeRow decode(const std::string& line) const;

 private:
  std::vector<std::string> knob_names_;
};

/// knowledge.csv rows: one column per knob, per feature, per EFP.
class OperatingPointCodec {
 public:
  explicit OperatingPointCodec(const ApplicationDescription& desc);

  std::string header() const;
  std::string encode(const OperatingPoint& op) const;
  OperatingPoint decode(const std::string& line) const;

 private:
  std::vector<std::string> names_;
  std::size_t n_knobs_;
  std::size_t n_features_;
  std::size_t n_efps_;
};

/// clusters.csv rows: one column per feature.
class CentroidCodec {
 public:
  explicit CentroidCodec(const ApplicationDescription& desc);

  std::string header() const;
  std::string encode(const FeatureVector& centroid) const;
  FeatureVector decode(const std::string& line) const;

 private:
  std::vector<std::string> feature_names_;
};

/// report.csv rows: family, regime, signed_r2, mae_adj, status.
struct ReportRow {
  std::string efp;
  std::string family;
  std::string regime;
  double signed_r2 = 0.0;
  double mae_adj = 0.0;
  std::string status;
};

std::string report_header();
std::string encode_report_row(const ReportRow& row);
ReportRow decode_report_row(const std::string& line);

}  // namespace otto::csv
