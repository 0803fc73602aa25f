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

#include "ifenet/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <sstream>
#include <utility>

#include "ifenet/random.h"
#include "json.hpp"

namespace ifenet {
namespace {

using json = nlohmann::json;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> ParseReal(std::string_view s) {
  s = Trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Splits CSV text into records of fields. Quoted fields may contain the
// delimiter, newlines and doubled quotes.
std::vector<std::vector<std::string>> Tokenize(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t line = 1;

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    // A blank line yields one empty field; skip it.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r') {
      // Swallowed; LF terminates the record.
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("CSV: unterminated quoted field near line " + std::to_string(line));
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string CsvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

const char* ColumnKindName(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

std::string FormatReal(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<size_t>(len));
}

size_t RawTable::ColumnIndex(std::string_view name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw DataError("column '" + std::string(name) + "' not found");
  return static_cast<size_t>(it - column_names.begin());
}

RawTable ParseCsv(std::string_view text, const std::string& label_column,
                  const std::map<std::string, ColumnKind>& kinds, const CsvOptions& options) {
  const auto records = Tokenize(text, options.delimiter);
  if (records.empty()) throw DataError("CSV: missing header row");

  RawTable table;
  table.label_column = label_column;
  for (const std::string& name : records[0]) table.column_names.emplace_back(Trim(name));
  const size_t width = table.column_names.size();
  const size_t label = table.ColumnIndex(label_column);

  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != width) {
      throw DataError("CSV: ragged row " + std::to_string(r + 1) + ": expected " +
                      std::to_string(width) + " cells, found " + std::to_string(rec.size()));
    }
    std::vector<std::optional<std::string>> row;
    row.reserve(width);
    for (const std::string& cell : rec) {
      const std::string_view trimmed = Trim(cell);
      const bool missing =
          std::find(options.missing_tokens.begin(), options.missing_tokens.end(), trimmed) !=
          options.missing_tokens.end();
      if (missing) row.emplace_back(std::nullopt);
      else row.emplace_back(std::string(trimmed));
    }
    table.rows.push_back(std::move(row));
  }

  table.kinds.assign(width, ColumnKind::kNumeric);
  for (size_t c = 0; c < width; ++c) {
    if (const auto it = kinds.find(table.column_names[c]); it != kinds.end()) {
      table.kinds[c] = it->second;
    } else {
      const bool numeric = std::all_of(table.rows.begin(), table.rows.end(), [&](const auto& row) {
        return !row[c].has_value() || ParseReal(*row[c]).has_value();
      });
      table.kinds[c] = numeric ? ColumnKind::kNumeric : ColumnKind::kCategorical;
    }
  }
  table.kinds[label] = ColumnKind::kCategorical;
  return table;
}

RawTable LoadCsv(const std::filesystem::path& path, const std::string& label_column,
                 const std::map<std::string, ColumnKind>& kinds, const CsvOptions& options) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return ParseCsv(ReadFile(path), label_column, kinds, options);
}

RawTable DropMissing(const RawTable& table) {
  RawTable out = table;
  out.rows.clear();
  for (const auto& row : table.rows) {
    if (std::all_of(row.begin(), row.end(), [](const auto& cell) { return cell.has_value(); })) {
      out.rows.push_back(row);
    }
  }
  if (out.rows.empty()) throw DataError("DropMissing: every row has a missing cell");
  return out;
}

size_t TieGroupedOrder::num_features() const {
  size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

void TieGroupedOrder::ValidateCovers(size_t d) const {
  std::vector<bool> seen(d, false);
  for (const auto& group : groups) {
    if (group.empty()) throw InvalidArgument("ranking: empty tie group");
    for (const size_t f : group) {
      if (f >= d) throw InvalidArgument("ranking: feature index " + std::to_string(f) + " >= d");
      if (seen[f]) throw InvalidArgument("ranking: feature " + std::to_string(f) + " repeated");
      seen[f] = true;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InvalidArgument("ranking: does not cover all " + std::to_string(d) + " features");
  }
}

void EncodedDataset::Validate() const {
  if (x.rows() < 1) throw DataError("EncodedDataset: no instances");
  if (x.cols() < 2) throw DataError("EncodedDataset: need at least 2 features");
  if (!x.allFinite()) throw DataError("EncodedDataset: non-finite feature value");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw DataError("EncodedDataset: label count does not match rows");
  }
  if (num_classes < 2) throw DataError("EncodedDataset: need at least 2 classes");
  for (const int label : y) {
    if (label < 0 || label >= num_classes) throw DataError("EncodedDataset: label out of range");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw DataError("EncodedDataset: feature name count does not match columns");
  }
}

EncodedDataset EncodedDataset::Subset(std::span<const size_t> indices) const {
  EncodedDataset out;
  out.x.resize(static_cast<Eigen::Index>(indices.size()), x.cols());
  out.y.reserve(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(indices[i]));
    out.y.push_back(y[indices[i]]);
  }
  out.feature_names = feature_names;
  out.num_classes = num_classes;
  out.planted_truth = planted_truth;
  return out;
}

std::string OutputFeature::name() const {
  return kind == Kind::kPassthrough ? column : column + "=" + category;
}

std::vector<std::string> EncoderSpec::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features.size());
  for (const auto& f : features) names.push_back(f.name());
  return names;
}

std::string EncoderSpec::ToJson() const {
  json doc;
  doc["format"] = "ifenet-encoder";
  doc["version"] = kVersion;
  doc["label_column"] = label_column;
  doc["classes"] = classes;
  json cols = json::array();
  for (const auto& c : columns) {
    cols.push_back({{"name", c.name}, {"kind", ColumnKindName(c.kind)}, {"categories", c.categories}});
  }
  doc["columns"] = cols;
  json feats = json::array();
  for (const auto& f : features) {
    json entry = {{"name", f.name()},
                  {"column", f.column},
                  {"kind", f.kind == OutputFeature::Kind::kPassthrough ? "passthrough" : "indicator"}};
    if (f.kind == OutputFeature::Kind::kIndicator) entry["category"] = f.category;
    feats.push_back(entry);
  }
  doc["features"] = feats;
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

EncoderSpec EncoderSpec::FromJson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoder spec: ") + e.what());
  }
  if (doc.value("format", "") != "ifenet-encoder") throw FormatError("encoder spec: wrong format tag");
  if (doc.value("version", -1) != kVersion) {
    throw FormatError("encoder spec: unsupported version " + doc.value("version", json(-1)).dump());
  }
  try {
    EncoderSpec spec;
    spec.label_column = doc.at("label_column").get<std::string>();
    spec.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& c : doc.at("columns")) {
      EncodedColumn col;
      col.name = c.at("name").get<std::string>();
      col.kind = c.at("kind").get<std::string>() == "numeric" ? ColumnKind::kNumeric
                                                              : ColumnKind::kCategorical;
      col.categories = c.at("categories").get<std::vector<std::string>>();
      spec.columns.push_back(std::move(col));
    }
    for (const auto& f : doc.at("features")) {
      OutputFeature feat;
      feat.column = f.at("column").get<std::string>();
      if (f.at("kind").get<std::string>() == "indicator") {
        feat.kind = OutputFeature::Kind::kIndicator;
        feat.category = f.at("category").get<std::string>();
      }
      spec.features.push_back(std::move(feat));
    }
    spec.warnings = doc.value("warnings", std::vector<std::string>{});
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoder spec: ") + e.what());
  }
}

EncoderSpec FitEncoder(const RawTable& table) {
  const size_t label = table.label_index();
  EncoderSpec spec;
  spec.label_column = table.label_column;

  std::set<std::string> classes;
  for (const auto& row : table.rows) {
    if (!row[label]) throw DataError("FitEncoder: missing label; drop missing rows first");
    classes.insert(*row[label]);
  }
  if (classes.size() < 2) {
    throw DataError("FitEncoder: label column '" + table.label_column + "' has " +
                    std::to_string(classes.size()) + " class(es); need at least 2");
  }
  spec.classes.assign(classes.begin(), classes.end());

  for (size_t c = 0; c < table.num_columns(); ++c) {
    if (c == label) continue;
    EncodedColumn col{table.column_names[c], table.kinds[c], {}};
    if (col.kind == ColumnKind::kNumeric) {
      spec.features.push_back({OutputFeature::Kind::kPassthrough, col.name, ""});
    } else {
      std::set<std::string> cats;
      for (const auto& row : table.rows) {
        if (!row[c]) throw DataError("FitEncoder: missing value in column '" + col.name + "'");
        cats.insert(*row[c]);
      }
      col.categories.assign(cats.begin(), cats.end());
      if (col.categories.size() == 1) {
        spec.warnings.push_back("column '" + col.name +
                                "' has a single category; keeping one constant indicator");
      }
      for (const auto& cat : col.categories) {
        spec.features.push_back({OutputFeature::Kind::kIndicator, col.name, cat});
      }
    }
    spec.columns.push_back(std::move(col));
  }
  return spec;
}

EncodedDataset ApplyEncoder(const EncoderSpec& spec, const RawTable& table) {
  std::vector<size_t> source(spec.columns.size());
  for (size_t i = 0; i < spec.columns.size(); ++i) {
    source[i] = table.ColumnIndex(spec.columns[i].name);
  }
  const size_t label = table.ColumnIndex(spec.label_column);

  EncodedDataset out;
  out.x = Matrix::Zero(static_cast<Eigen::Index>(table.num_rows()),
                       static_cast<Eigen::Index>(spec.num_features()));
  out.y.reserve(table.num_rows());
  out.feature_names = spec.feature_names();
  out.num_classes = spec.num_classes();

  for (size_t r = 0; r < table.num_rows(); ++r) {
    const auto& row = table.rows[r];
    const auto& label_cell = row[label];
    if (!label_cell) throw DataError("ApplyEncoder: missing label in row " + std::to_string(r + 1));
    const auto cls = std::lower_bound(spec.classes.begin(), spec.classes.end(), *label_cell);
    if (cls == spec.classes.end() || *cls != *label_cell) {
      throw DataError("ApplyEncoder: unseen label '" + *label_cell + "' in row " +
                      std::to_string(r + 1));
    }
    out.y.push_back(static_cast<int>(cls - spec.classes.begin()));

    Eigen::Index out_col = 0;
    for (size_t i = 0; i < spec.columns.size(); ++i) {
      const EncodedColumn& col = spec.columns[i];
      const auto& cell = row[source[i]];
      if (!cell) {
        throw DataError("ApplyEncoder: missing value in row " + std::to_string(r + 1) +
                        ", column '" + col.name + "'");
      }
      if (col.kind == ColumnKind::kNumeric) {
        const auto v = ParseReal(*cell);
        if (!v) {
          throw DataError("ApplyEncoder: non-numeric value '" + *cell + "' in row " +
                          std::to_string(r + 1) + ", column '" + col.name + "'");
        }
        out.x(static_cast<Eigen::Index>(r), out_col++) = *v;
      } else {
        const auto it = std::lower_bound(col.categories.begin(), col.categories.end(), *cell);
        if (it != col.categories.end() && *it == *cell) {
          out.x(static_cast<Eigen::Index>(r), out_col + (it - col.categories.begin())) = 1.0;
        }
        out_col += static_cast<Eigen::Index>(col.categories.size());
      }
    }
  }
  return out;
}

std::array<size_t, 3> SplitSpec::Resolve(size_t n) const {
  if (fractions.has_value() == counts.has_value()) {
    throw InvalidArgument("SplitSpec: give exactly one of fractions or counts");
  }
  if (counts) {
    const auto& c = *counts;
    if (c[0] + c[1] + c[2] != n) {
      throw InvalidArgument("SplitSpec: counts " + std::to_string(c[0]) + "+" +
                            std::to_string(c[1]) + "+" + std::to_string(c[2]) +
                            " do not sum to n=" + std::to_string(n));
    }
    if (c[0] == 0 || c[1] == 0 || c[2] == 0) throw InvalidArgument("SplitSpec: empty split");
    return c;
  }
  const auto& f = *fractions;
  if (f[0] <= 0.0 || f[1] <= 0.0 || f[2] <= 0.0) {
    throw InvalidArgument("SplitSpec: fractions must be positive");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw InvalidArgument("SplitSpec: fractions must sum to 1");
  }
  const auto val = static_cast<size_t>(std::llround(static_cast<double>(n) * f[1]));
  const auto test = static_cast<size_t>(std::llround(static_cast<double>(n) * f[2]));
  if (val == 0 || test == 0 || val + test >= n) {
    throw InvalidArgument("SplitSpec: fractions infeasible for n=" + std::to_string(n));
  }
  return {n - val - test, val, test};
}

SplitResult Split(const EncodedDataset& dataset, const SplitSpec& spec) {
  const size_t n = static_cast<size_t>(dataset.n());
  const auto sizes = spec.Resolve(n);
  Rng rng(DeriveSeed(spec.seed, "split"));
  SplitResult result;

  // Stratified order: shuffle within each class, key each instance by its
  // within-class quantile, and deal the merged order into the splits.
  std::vector<size_t> order;
  if (spec.stratify) {
    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < n; ++i) by_class[dataset.y[i]].push_back(i);
    std::vector<std::tuple<double, int, size_t>> keyed;
    keyed.reserve(n);
    for (auto& [cls, members] : by_class) {
      Shuffle(std::span<size_t>(members), rng);
      for (size_t k = 0; k < members.size(); ++k) {
        keyed.emplace_back((static_cast<double>(k) + 0.5) / static_cast<double>(members.size()),
                           cls, members[k]);
      }
    }
    std::sort(keyed.begin(), keyed.end());
    for (const auto& [key, cls, idx] : keyed) order.push_back(idx);

    // Every class must reach every split, else fall back.
    size_t offset = 0;
    bool ok = true;
    for (size_t s = 0; s < 3 && ok; ++s) {
      std::set<int> present;
      for (size_t i = offset; i < offset + sizes[s]; ++i) present.insert(dataset.y[order[i]]);
      ok = present.size() == by_class.size();
      offset += sizes[s];
    }
    if (!ok) {
      result.warnings.push_back(
          "stratification infeasible (a class is missing from some split); using unstratified split");
      order.clear();
    }
  }
  if (order.empty()) order = RandomPermutation(n, rng);

  size_t offset = 0;
  for (size_t s = 0; s < 3; ++s) {
    auto& idx = result.indices[s];
    idx.assign(order.begin() + static_cast<std::ptrdiff_t>(offset),
               order.begin() + static_cast<std::ptrdiff_t>(offset + sizes[s]));
    std::sort(idx.begin(), idx.end());
    offset += sizes[s];
  }
  result.train = dataset.Subset(result.indices[0]);
  result.validation = dataset.Subset(result.indices[1]);
  result.test = dataset.Subset(result.indices[2]);
  return result;
}

EncodedDataset SynthDataset(size_t n, size_t d, size_t k_informative, double noise,
                            uint64_t seed) {
  if (d < 2) throw InvalidArgument("SynthDataset: d must be >= 2");
  if (k_informative < 1 || k_informative > d) {
    throw InvalidArgument("SynthDataset: k_informative must lie in [1, d]");
  }
  if (n < 10) throw InvalidArgument("SynthDataset: n must be >= 10");
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw InvalidArgument("SynthDataset: noise must be finite and >= 0");
  }

  Rng rng(DeriveSeed(seed, "synth"));
  EncodedDataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.y.resize(n);
  ds.num_classes = 2;
  for (size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (size_t j = 0; j < d; ++j) {
      const double v = StandardNormal(rng);
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      if (j < k_informative) score += static_cast<double>(k_informative - j) * v;
    }
    score += noise * StandardNormal(rng);
    ds.y[i] = score > 0.0 ? 1 : 0;
  }
  for (size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  TieGroupedOrder truth;
  for (size_t j = 0; j < k_informative; ++j) truth.groups.push_back({j});
  if (k_informative < d) {
    std::vector<size_t> rest(d - k_informative);
    std::iota(rest.begin(), rest.end(), k_informative);
    truth.groups.push_back(std::move(rest));
  }
  ds.planted_truth = std::move(truth);
  return ds;
}

std::string EncodedToCsv(const EncodedDataset& dataset) {
  std::string out;
  for (const auto& name : dataset.feature_names) {
    out += CsvEscape(name);
    out += ',';
  }
  out += "label\n";
  for (Eigen::Index r = 0; r < dataset.x.rows(); ++r) {
    for (Eigen::Index c = 0; c < dataset.x.cols(); ++c) {
      out += FormatReal(dataset.x(r, c));
      out += ',';
    }
    out += std::to_string(dataset.y[static_cast<size_t>(r)]);
    out += '\n';
  }
  return out;
}

EncodedDataset EncodedFromCsv(std::string_view text, int num_classes) {
  const auto records = Tokenize(text, ',');
  if (records.empty()) throw DataError("encoded CSV: missing header");
  const auto& header = records[0];
  if (header.size() < 2 || header.back() != "label") {
    throw DataError("encoded CSV: last column must be 'label'");
  }
  const size_t d = header.size() - 1;
  EncodedDataset ds;
  ds.feature_names.assign(header.begin(), header.end() - 1);
  ds.num_classes = num_classes;
  ds.x.resize(static_cast<Eigen::Index>(records.size() - 1), static_cast<Eigen::Index>(d));
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != d + 1) throw DataError("encoded CSV: ragged row " + std::to_string(r + 1));
    for (size_t c = 0; c < d; ++c) {
      const auto v = ParseReal(rec[c]);
      if (!v) throw DataError("encoded CSV: bad number in row " + std::to_string(r + 1));
      ds.x(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = *v;
    }
    int label = 0;
    const auto& cell = rec[d];
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw DataError("encoded CSV: bad label in row " + std::to_string(r + 1));
    }
    ds.y.push_back(label);
  }
  ds.Validate();
  return ds;
}

}  // namespace ifenet
