/*
 * csv.cpp
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

#include "otto/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace otto::csv {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error("cannot encode a non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t column) {
  const char* start = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(start, &end);
  if (end == start || static_cast<std::size_t>(end - start) != field.size())
    throw Error("column " + std::to_string(column) + ": '" + field + "' is not a number");
  if (!std::isfinite(v))
    throw Error("column " + std::to_string(column) + ": '" + field + "' is not finite");
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

void expect_columns(const std::vector<std::string>& fields, std::size_t expected) {
  if (fields.size() == expected) return;
  // Either the first missing column or the first surplus one.
  const std::size_t offending = std::min(fields.size(), expected) + 1;
  throw Error("expected " + std::to_string(expected) + " columns, got " +
              std::to_string(fields.size()) + " (column " + std::to_string(offending) + ")");
}

namespace {

std::int64_t parse_timestamp(const std::string& field, std::size_t column) {
  const char* start = field.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(start, &end, 10);
  if (end == start || static_cast<std::size_t>(end - start) != field.size())
    throw Error("column " + std::to_string(column) + ": '" + field + "' is not a timestamp");
  return v;
}

}  // namespace

ObservationCodec::ObservationCodec(const ApplicationDescription& desc)
    : n_knobs_(desc.knobs.size()),
      n_features_(desc.features.size()),
      n_efps_(desc.efps.size()) {
  names_.push_back("client_id");
  for (const auto& k : desc.knobs) names_.push_back(k.name);
  for (const auto& f : desc.features) names_.push_back(f);
  for (const auto& e : desc.efps) names_.push_back(e);
  names_.push_back("timestamp");
}

std::string ObservationCodec::header() const { return join(names_); }

std::string ObservationCodec::encode(const Observation& obs) const {
  if (obs.config.values.size() != n_knobs_ || obs.features.values.size() != n_features_ ||
      obs.metrics.values.size() != n_efps_)
    throw Error("observation arity does not match the application description");
  if (obs.client_id.empty() || obs.client_id.find(',') != std::string::npos ||
      obs.client_id.find('\n') != std::string::npos)
    throw Error("invalid client_id '" + obs.client_id + "'");
  std::vector<std::string> fields;
  fields.reserve(columns());
  fields.push_back(obs.client_id);
  for (double v : obs.config.values) fields.push_back(format_double(v));
  for (double v : obs.features.values) fields.push_back(format_double(v));
  for (double v : obs.metrics.values) fields.push_back(format_double(v));
  fields.push_back(std::to_string(obs.timestamp_ms));
  return join(fields);
}

Observation ObservationCodec::decode(const std::string& line) const {
  const auto fields = split_line(line);
  expect_columns(fields, columns());
  Observation obs;
  std::size_t col = 0;
  obs.client_id = fields[col++];
  if (obs.client_id.empty()) throw Error("column 1: client_id must be non-empty");
  for (std::size_t i = 0; i < n_knobs_; ++i, ++col)
    obs.config.values.push_back(parse_double(fields[col], col + 1));
  for (std::size_t i = 0; i < n_features_; ++i, ++col)
    obs.features.values.push_back(parse_double(fields[col], col + 1));
  for (std::size_t i = 0; i < n_efps_; ++i, ++col)
    obs.metrics.values.push_back(parse_double(fields[col], col + 1));
  obs.timestamp_ms = parse_timestamp(fields[col], col + 1);
  return obs;
}

DoeCodec::DoeCodec(const ApplicationDescription& desc) {
  for (const auto& k : desc.knobs) knob_names_.push_back(k.name);
}

std::string DoeCodec::header() const {
  auto fields = knob_names_;
  fields.push_back("remaining_repetitions");
  return join(fields);
}

std::string DoeCodec::encode(const DoeRow& row) const {
  if (row.config.values.size() != knob_names_.size())
    throw Error("design row arity does not match the knob list");
  if (row.remaining_repetitions < 0) throw Error("remaining_repetitions must be >= 0");
  std::vector<std::string> fields;
  for (double v : row.config.values) fields.push_back(format_double(v));
  fields.push_back(std::to_string(row.remaining_repetitions));
  return join(fields);
}

DoeRow DoeCodec::decode(const std::string& line) const {
  const auto fields = split_line(line);
  expect_columns(fields, knob_names_.size() + 1);
  DoeRow row;
  for (std::size_t i = 0; i < knob_names_.size(); ++i)
    row.config.values.push_back(parse_double(fields[i], i + 1));
  const std::size_t last = knob_names_.size();
  const double reps = parse_double(fields[last], last + 1);
  if (reps < 0 || reps != std::floor(reps))
    throw Error("column " + std::to_string(last + 1) +
                ": remaining_repetitions must be a non-negative integer");
  row.remaining_repetitions = static_cast<int>(reps);
  return row;
}

OperatingPointCodec::OperatingPointCodec(const ApplicationDescription& desc)
    : n_knobs_(desc.knobs.size()),
      n_features_(desc.features.size()),
      n_efps_(desc.efps.size()) {
  for (const auto& k : desc.knobs) names_.push_back(k.name);
  for (const auto& f : desc.features) names_.push_back(f);
  for (const auto& e : desc.efps) names_.push_back(e);
}

std::string OperatingPointCodec::header() const { return join(names_); }

std::string OperatingPointCodec::encode(const OperatingPoint& op) const {
  if (op.config.values.size() != n_knobs_ || op.features.values.size() != n_features_ ||
      op.expected.values.size() != n_efps_)
    throw Error("operating point arity does not match the application description");
  std::vector<std::string> fields;
  fields.reserve(names_.size());
  for (double v : op.config.values) fields.push_back(format_double(v));
  for (double v : op.features.values) fields.push_back(format_double(v));
  for (double v : op.expected.values) fields.push_back(format_double(v));
  return join(fields);
}

OperatingPoint OperatingPointCodec::decode(const std::string& line) const {
  const auto fields = split_line(line);
  expect_columns(fields, names_.size());
  OperatingPoint op;
  std::size_t col = 0;
  for (std::size_t i = 0; i < n_knobs_; ++i, ++col)
    op.config.values.push_back(parse_double(fields[col], col + 1));
  for (std::size_t i = 0; i < n_features_; ++i, ++col)
    op.features.values.push_back(parse_double(fields[col], col + 1));
  for (std::size_t i = 0; i < n_efps_; ++i, ++col)
    op.expected.values.push_back(parse_double(fields[col], col + 1));
  return op;
}

CentroidCodec::CentroidCodec(const ApplicationDescription& desc)
    : feature_names_(desc.features) {}

std::string CentroidCodec::header() const { return join(feature_names_); }

std::string CentroidCodec::encode(const FeatureVector& centroid) const {
  if (centroid.values.size() != feature_names_.size())
    throw Error("centroid arity does not match the feature list");
  std::vector<std::string> fields;
  for (double v : centroid.values) fields.push_back(format_double(v));
  return join(fields);
}

FeatureVector CentroidCodec::decode(const std::string& line) const {
  // Featureless applications have one zero-width centroid; its row is blank.
  if (feature_names_.empty() && line.empty()) return FeatureVector{};
  const auto fields = split_line(line);
  expect_columns(fields, feature_names_.size());
  FeatureVector c;
  for (std::size_t i = 0; i < fields.size(); ++i)
    c.values.push_back(parse_double(fields[i], i + 1));
  return c;
}

std::string report_header() { return "efp,family,regime,signed_r2,mae_adj,status"; }

std::string encode_report_row(const ReportRow& row) {
  return join({row.efp, row.family, row.regime, format_double(row.signed_r2),
               format_double(row.mae_adj), row.status});
}

ReportRow decode_report_row(const std::string& line) {
  const auto fields = split_line(line);
  expect_columns(fields, 6);
  ReportRow row;
  row.efp = fields[0];
  row.family = fields[1];
  row.regime = fields[2];
  row.signed_r2 = parse_double(fields[3], 4);
  row.mae_adj = parse_double(fields[4], 5);
  row.status = fields[5];
  return row;
}

}  // namespace otto::csv
