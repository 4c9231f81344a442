/*
 * Copyright 2026 The mpgp Authors
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
 *
 */

#include "mpgp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace mpgp {

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) out.push_back(field);
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

IngestedData parse(std::istream& in, const std::string& label_column, char delimiter,
                   const std::vector<std::string>* fixed_labels) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("input has no header row");
  std::vector<std::string> header = split(line, delimiter);
  for (auto& h : header) h = trim(h);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) throw std::invalid_argument("label column '" + label_column + "' not found");
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  IngestedData out;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_idx) out.feature_names.push_back(header[j]);

  std::map<std::string, int> label_map;
  if (fixed_labels) {
    out.label_names = *fixed_labels;
    for (std::size_t k = 0; k < fixed_labels->size(); ++k) label_map[(*fixed_labels)[k]] = static_cast<int>(k);
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> bad_rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_number;
    std::vector<std::string> fields = split(line, delimiter);
    if (fields.size() != header.size()) {
      bad_rows.push_back(row_number);
      continue;
    }
    const std::string label = trim(fields[label_idx]);
    std::vector<double> values;
    bool ok = !label.empty();
    for (std::size_t j = 0; j < fields.size() && ok; ++j) {
      if (j == label_idx) continue;
      double v = 0.0;
      ok = parse_double(trim(fields[j]), v);
      values.push_back(v);
    }
    if (!ok) {
      bad_rows.push_back(row_number);
      continue;
    }
    auto it = label_map.find(label);
    if (it == label_map.end()) {
      if (fixed_labels) throw std::invalid_argument("row " + std::to_string(row_number) + ": unknown label '" + label + "'");
      it = label_map.emplace(label, static_cast<int>(out.label_names.size())).first;
      out.label_names.push_back(label);
    }
    out.data.y.push_back(it->second);
    rows.push_back(std::move(values));
  }
  if (!bad_rows.empty()) {
    std::ostringstream msg;
    msg << "missing or malformed values in data rows:";
    for (std::size_t r : bad_rows) msg << ' ' << r;
    throw std::invalid_argument(msg.str());
  }
  if (rows.empty()) throw std::invalid_argument("input has no data rows");
  out.data.num_classes = static_cast<int>(out.label_names.size());
  if (!fixed_labels && out.data.num_classes < 2)
    throw std::invalid_argument("data contain a single class; at least two are required");

  const Eigen::Index d = static_cast<Eigen::Index>(out.feature_names.size());
  out.data.X.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) out.data.X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return out;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return in;
}

}  // namespace

IngestedData ingest(std::istream& in, const std::string& label_column, char delimiter) {
  return parse(in, label_column, delimiter, nullptr);
}

IngestedData ingest_file(const std::string& path, const std::string& label_column, char delimiter) {
  std::ifstream in = open(path);
  return ingest(in, label_column, delimiter);
}

IngestedData ingest_with_labels(std::istream& in, const std::string& label_column, char delimiter,
                                const std::vector<std::string>& label_names) {
  return parse(in, label_column, delimiter, &label_names);
}

Mat read_features(std::istream& in, const std::vector<std::string>& feature_names, char delimiter) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("input has no header row");
  std::vector<std::string> header = split(line, delimiter);
  for (auto& h : header) h = trim(h);
  std::vector<std::size_t> columns;
  for (const std::string& name : feature_names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("feature column '" + name + "' not found");
    columns.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> bad_rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_number;
    const std::vector<std::string> fields = split(line, delimiter);
    std::vector<double> values;
    bool ok = fields.size() == header.size();
    for (std::size_t j = 0; j < columns.size() && ok; ++j) {
      double v = 0.0;
      ok = parse_double(trim(fields[columns[j]]), v);
      values.push_back(v);
    }
    if (!ok) {
      bad_rows.push_back(row_number);
      continue;
    }
    rows.push_back(std::move(values));
  }
  if (!bad_rows.empty()) {
    std::ostringstream msg;
    msg << "missing or malformed values in data rows:";
    for (std::size_t r : bad_rows) msg << ' ' << r;
    throw std::invalid_argument(msg.str());
  }
  Mat X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < columns.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return X;
}

Standardizer Standardizer::fit(const Mat& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
    if (var > 0.0) {
      s.scale(j) = std::sqrt(var);
    } else {
      s.scale(j) = 0.0;
      s.constant_columns.push_back(j);
    }
  }
  return s;
}

Mat Standardizer::apply(const Mat& X) const {
  Mat out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (scale(j) > 0.0)
      out.col(j) = (X.col(j).array() - mean(j)) / scale(j);
    else
      out.col(j).setZero();
  }
  return out;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int num_classes, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("at least two folds are required");
  std::mt19937_64 rng(seed);
  std::vector<int> assignment(labels.size(), 0);
  int next = 0;
  for (int k = 0; k < num_classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == k) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) {
      assignment[i] = next;
      next = (next + 1) % folds;
    }
  }
  return assignment;
}

}  // namespace mpgp
