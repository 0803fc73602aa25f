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

#ifndef IFENET_TOOLS_CLI_COMMANDS_H_
#define IFENET_TOOLS_CLI_COMMANDS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ifenet/data.h"
#include "ifenet/metrics.h"
#include "ifenet/train.h"

namespace ifenet::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class Format { kCsv, kJson };

Format ParseFormat(const std::string& name);

// Prepared-data directory layout (written by prep and synth):
//   train.csv, val.csv, test.csv   encoded splits
//   summary.json                   n/d/C per split, feature and class names
//   encoder.json                   prep only
//   truth.txt                      synth only
struct PreparedData {
  EncodedDataset train;
  EncodedDataset validation;
  EncodedDataset test;
  std::vector<std::string> classes;
  std::optional<TieGroupedOrder> truth;
  std::filesystem::path encoder_path;  // empty when absent
};

PreparedData LoadPrepared(const std::filesystem::path& dir);

// Truth text: groups separated by ';', tied feature names inside a group
// separated by ','. Blank lines and lines starting with '#' are ignored.
std::string FormatTruth(const TieGroupedOrder& truth, const std::vector<std::string>& names);
TieGroupedOrder ParseTruth(const std::string& text, const std::vector<std::string>& names);

// "a,b,c" split helpers for flag values.
std::vector<double> ParseRealList(const std::string& text);
std::vector<size_t> ParseCountList(const std::string& text);
// Three comma-separated values: all integers -> counts, else fractions.
SplitSpec ParseSplit(const std::string& text, uint64_t seed, bool stratify);

struct PrepOptions {
  std::filesystem::path data;
  std::string label_column;
  std::filesystem::path out;
  SplitSpec split;
  char delimiter = ',';
};

struct DatasetSummary {
  std::array<size_t, 3> sizes{};
  size_t d = 0;
  int num_classes = 0;
  std::vector<std::string> warnings;
};

DatasetSummary CmdPrep(const PrepOptions& options);

struct SynthOptions {
  size_t n = 1000;
  size_t d = 10;
  size_t k = 3;
  double noise = 0.1;
  uint64_t seed = 0;
  std::array<double, 3> fractions = {0.7, 0.15, 0.15};
  std::filesystem::path out;
};

DatasetSummary CmdSynth(const SynthOptions& options);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  TrainConfig config;
  Format format = Format::kJson;
  size_t oracle_repeats = 5;
};

struct TrainOutcome {
  IfeNetParams params;
  TrainHistory history;
  MetricsReport test_metrics;
  std::vector<FeatureScore> ranking;  // IFENet only
};

TrainOutcome CmdTrain(const TrainOptions& options);

// Reads the "config" object of a RunReport (or a bare config document).
TrainConfig TrainConfigFromJson(const std::string& text);

struct RankOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  std::string split = "train";
  std::filesystem::path out;
  bool per_instance = false;
  Format format = Format::kCsv;
};

std::vector<FeatureScore> CmdRank(const RankOptions& options);

struct EvalRankingOptions {
  std::filesystem::path ranking;
  std::filesystem::path truth;
  std::vector<size_t> k_list;  // empty: 1..d
  std::filesystem::path out;
  Format format = Format::kCsv;
};

struct NdcgPoint {
  size_t k = 0;
  double ndcg = 0.0;
};

std::vector<NdcgPoint> CmdEvalRanking(const EvalRankingOptions& options);

struct SweepOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::vector<double> r_values = {1, 2, 3, 4, 5, 6, 7, 8};
  TrainConfig base;
  size_t threads = 1;
  Format format = Format::kCsv;
};

std::vector<SweepRow> CmdSweepR(const SweepOptions& options);

struct TuneOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  size_t trials = 50;
  uint64_t seed = 0;
  TrainConfig base;
  size_t threads = 1;
};

SearchResult CmdTune(const TuneOptions& options);

// Parses argv and dispatches; returns the process exit status.
int Main(int argc, char** argv);

}  // namespace ifenet::cli

#endif  // IFENET_TOOLS_CLI_COMMANDS_H_
