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

#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "mpgp/kernel.hpp"

namespace mpgp {

/// A parsed table with string class labels mapped to 0-based indices in
/// first-appearance order.
struct IngestedData {
  LabeledDataset data;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;  // label_names[k] is the text of class k
};

/// Reads delimiter-separated text with a header row. The column named
/// `label_column` holds the class; every other column must be numeric.
/// Throws std::invalid_argument listing the rows with missing or
/// unparseable values, or when fewer than two classes appear.
IngestedData ingest(std::istream& in, const std::string& label_column, char delimiter = ',');
IngestedData ingest_file(const std::string& path, const std::string& label_column, char delimiter = ',');

/// Maps labels of another table onto an existing label mapping; unknown
/// labels are an error.
IngestedData ingest_with_labels(std::istream& in, const std::string& label_column, char delimiter,
                                const std::vector<std::string>& label_names);

/// Reads the named feature columns of a delimiter-separated table with a
/// header, in the given order; other columns are ignored.
Mat read_features(std::istream& in, const std::vector<std::string>& feature_names, char delimiter = ',');

/// Column-wise zero-mean, unit-variance transform fitted on one matrix and
/// applied to others. Constant columns map to zero.
struct Standardizer {
  Vec mean;
  Vec scale;
  std::vector<Eigen::Index> constant_columns;

  static Standardizer fit(const Mat& X);
  Mat apply(const Mat& X) const;
};

/// Seeded stratified assignment of each row to one of `folds` folds.
std::vector<int> stratified_folds(const std::vector<int>& labels, int num_classes, int folds, std::uint64_t seed);

}  // namespace mpgp
