/*
 * Copyright 2026 The IFENet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef IFENET_DATA_H_
#define IFENET_DATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ifenet/common.h"
#include "ifenet/io.h"

namespace ifenet {

enum class ColumnKind { kNumeric, kCategorical };

const char* ColumnKindName(ColumnKind kind);

struct CsvOptions {
  char delimiter = ',';
  // Cells equal to one of these (after trimming surrounding whitespace) are
  // missing.
  std::vector<std::string> missing_tokens = {"", "NA", "?"};
};

// Untyped table as read from disk. A cell is either missing or its raw text.
struct RawTable {
  std::vector<std::string> column_names;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<std::optional<std::string>>> rows;
  std::string label_column;

  size_t num_rows() const { return rows.size(); }
  size_t num_columns() const { return column_names.size(); }
  // Throws DataError if the column is absent.
  size_t ColumnIndex(std::string_view name) const;
  size_t label_index() const { return ColumnIndex(label_column); }
};

// Parses RFC-4180 style text: header row, quoted fields with "" escapes,
// CRLF or LF line endings. Column kinds are inferred (numeric iff every
// non-missing cell parses as a finite number) unless given in `kinds`. The
// label column is always categorical.
RawTable ParseCsv(std::string_view text, const std::string& label_column,
                  const std::map<std::string, ColumnKind>& kinds = {},
                  const CsvOptions& options = {});

RawTable LoadCsv(const std::filesystem::path& path, const std::string& label_column,
                 const std::map<std::string, ColumnKind>& kinds = {},
                 const CsvOptions& options = {});

// Removes every row holding at least one missing cell. Throws DataError when
// nothing is left.
RawTable DropMissing(const RawTable& table);

// Ordered groups of feature indices, most important first. Features inside
// a group are tied.
struct TieGroupedOrder {
  std::vector<std::vector<size_t>> groups;

  size_t num_features() const;
  // Throws InvalidArgument unless the groups partition 0..d-1.
  void ValidateCovers(size_t d) const;
};

struct EncodedDataset {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> feature_names;
  int num_classes = 0;
  std::optional<TieGroupedOrder> planted_truth;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
  // Throws DataError when an invariant is broken.
  void Validate() const;
  // Rows in the order given; planted truth and names are carried over.
  EncodedDataset Subset(std::span<const size_t> indices) const;
};

// One output column of the encoded matrix.
struct OutputFeature {
  enum class Kind { kPassthrough, kIndicator };
  Kind kind = Kind::kPassthrough;
  std::string column;
  std::string category;  // indicators only

  std::string name() const;
};

struct EncodedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<std::string> categories;  // sorted, categorical only
};

// Fitted schema: how a RawTable becomes an EncodedDataset. Serialized as a
// versioned JSON document so that inference reapplies the exact encoding.
struct EncoderSpec {
  static constexpr int kVersion = 1;

  std::vector<EncodedColumn> columns;  // non-label columns, table order
  std::vector<OutputFeature> features;
  std::string label_column;
  std::vector<std::string> classes;  // class index -> label text
  std::vector<std::string> warnings;

  size_t num_features() const { return features.size(); }
  int num_classes() const { return static_cast<int>(classes.size()); }
  std::vector<std::string> feature_names() const;

  std::string ToJson() const;
  static EncoderSpec FromJson(std::string_view text);
};

// Numeric columns pass through unscaled; each categorical column expands to
// one indicator per distinct value in lexicographic order; classes are the
// label values in lexicographic order.
EncoderSpec FitEncoder(const RawTable& table);

// Unseen categories encode as all-zero indicators. Unseen labels throw.
EncodedDataset ApplyEncoder(const EncoderSpec& spec, const RawTable& table);

struct SplitSpec {
  // Exactly one of fractions / counts is used.
  std::optional<std::array<double, 3>> fractions;
  std::optional<std::array<size_t, 3>> counts;
  uint64_t seed = 0;
  bool stratify = true;

  // Resolves to absolute (train, validation, test) counts for n rows.
  std::array<size_t, 3> Resolve(size_t n) const;
};

struct SplitResult {
  EncodedDataset train;
  EncodedDataset validation;
  EncodedDataset test;
  std::array<std::vector<size_t>, 3> indices;  // source rows, ascending
  std::vector<std::string> warnings;
};

SplitResult Split(const EncodedDataset& dataset, const SplitSpec& spec);

// Gaussian features; label = [sum_{i<k} (k - i) x_i + noise * eps > 0].
// Planted truth: features 0..k-1 in order, then one tie group of the rest.
EncodedDataset SynthDataset(size_t n, size_t d, size_t k_informative, double noise,
                            uint64_t seed);

// Encoded matrix as CSV: feature-name header plus a trailing `label` column
// holding class indices; reals carry 17 significant digits.
std::string EncodedToCsv(const EncodedDataset& dataset);
EncodedDataset EncodedFromCsv(std::string_view text, int num_classes);

// 17-significant-digit decimal.
std::string FormatReal(double v);

}  // namespace ifenet

#endif  // IFENET_DATA_H_
