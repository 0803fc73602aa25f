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

#include "cli/commands.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "ifenet/ife.h"
#include "ifenet/io.h"
#include "ifenet/model.h"
#include "ifenet/random.h"
#include "json.hpp"

namespace ifenet::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kSplitFiles[3] = {"train.csv", "val.csv", "test.csv"};
constexpr const char* kSplitNames[3] = {"train", "validation", "test"};

// Files of one command, committed together once everything has been
// produced: all temporaries are written first, then renamed into place.
class OutputSet {
 public:
  void Add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  void Commit(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::pair<fs::path, fs::path>> staged;
    for (const auto& [name, content] : files_) {
      const fs::path target = dir / name;
      fs::path tmp = target;
      tmp += ".tmp";
      WriteFileAtomic(tmp, content);
      staged.emplace_back(tmp, target);
    }
    for (const auto& [tmp, target] : staged) {
      fs::rename(tmp, target, ec);
      if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string LogLine(const std::string& message) { return Timestamp() + " " + message + "\n"; }

ojson SplitSummary(const EncodedDataset& ds) {
  return {{"n", ds.n()}, {"d", ds.d()}, {"C", ds.num_classes}};
}

std::string SummaryJson(const SplitResult& split, const std::vector<std::string>& classes,
                        const SplitSpec& spec, const std::vector<std::string>& warnings) {
  ojson doc;
  doc["format"] = "ifenet-prepared";
  doc["version"] = 1;
  doc["seed"] = spec.seed;
  doc["stratify"] = spec.stratify;
  doc["d"] = split.train.d();
  doc["num_classes"] = split.train.num_classes;
  doc["classes"] = classes;
  doc["feature_names"] = split.train.feature_names;
  ojson sizes;
  sizes["train"] = split.train.n();
  sizes["validation"] = split.validation.n();
  sizes["test"] = split.test.n();
  doc["instances"] = sizes;
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

DatasetSummary Summarize(const SplitResult& split, std::vector<std::string> warnings) {
  DatasetSummary s;
  s.sizes = {static_cast<size_t>(split.train.n()), static_cast<size_t>(split.validation.n()),
             static_cast<size_t>(split.test.n())};
  s.d = static_cast<size_t>(split.train.d());
  s.num_classes = split.train.num_classes;
  s.warnings = std::move(warnings);
  return s;
}

void AddSplits(OutputSet& out, const SplitResult& split) {
  out.Add(kSplitFiles[0], EncodedToCsv(split.train));
  out.Add(kSplitFiles[1], EncodedToCsv(split.validation));
  out.Add(kSplitFiles[2], EncodedToCsv(split.test));
}

std::string RankingCsv(const std::vector<FeatureScore>& ranking,
                       const std::vector<std::string>& names) {
  std::string out = "rank,feature,score\n";
  for (size_t i = 0; i < ranking.size(); ++i) {
    out += std::to_string(i + 1) + "," + names[ranking[i].feature] + "," +
           FormatReal(ranking[i].score) + "\n";
  }
  return out;
}

ojson RankingJson(const std::vector<FeatureScore>& ranking, const std::vector<std::string>& names) {
  ojson arr = ojson::array();
  for (size_t i = 0; i < ranking.size(); ++i) {
    arr.push_back({{"rank", i + 1},
                   {"feature", names[ranking[i].feature]},
                   {"score", ranking[i].score}});
  }
  return arr;
}

std::string NdcgCsv(const std::vector<NdcgPoint>& points) {
  std::string out = "K,ndcg\n";
  for (const NdcgPoint& p : points) out += std::to_string(p.k) + "," + FormatReal(p.ndcg) + "\n";
  return out;
}

ojson NdcgJson(const std::vector<NdcgPoint>& points) {
  ojson arr = ojson::array();
  for (const NdcgPoint& p : points) arr.push_back({{"K", p.k}, {"ndcg", p.ndcg}});
  return arr;
}

std::vector<NdcgPoint> NdcgCurve(const std::vector<size_t>& order, const std::vector<double>& grades,
                                 const std::vector<size_t>& k_list) {
  std::vector<NdcgPoint> points;
  for (const size_t k : k_list) points.push_back({k, NdcgAtK(order, grades, k)});
  return points;
}

std::vector<size_t> AllK(size_t d) {
  std::vector<size_t> ks(d);
  std::iota(ks.begin(), ks.end(), size_t{1});
  return ks;
}

size_t FeatureIndex(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidArgument("unknown feature '" + name + "'");
  return static_cast<size_t>(it - names.begin());
}

std::string Trimmed(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitOn(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(Trimmed(cur));
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

ojson MetricsJson(const MetricsReport& m) { return ojson::parse(m.ToJson()); }

const EncodedDataset& PickSplit(const PreparedData& data, const std::string& name) {
  if (name == "train") return data.train;
  if (name == "val" || name == "validation") return data.validation;
  if (name == "test") return data.test;
  throw InvalidArgument("unknown split '" + name + "' (train, val, test)");
}

}  // namespace

Format ParseFormat(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw InvalidArgument("unknown format '" + name + "' (csv, json)");
}

std::vector<double> ParseRealList(const std::string& text) {
  std::vector<double> out;
  for (const std::string& part : SplitOn(text, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size()) throw InvalidArgument("bad number '" + part + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<size_t> ParseCountList(const std::string& text) {
  std::vector<size_t> out;
  for (const double v : ParseRealList(text)) {
    if (v < 0 || v != static_cast<double>(static_cast<size_t>(v))) {
      throw InvalidArgument("expected non-negative integers in '" + text + "'");
    }
    out.push_back(static_cast<size_t>(v));
  }
  return out;
}

SplitSpec ParseSplit(const std::string& text, uint64_t seed, bool stratify) {
  const std::vector<std::string> parts = SplitOn(text, ',');
  const std::vector<double> values = ParseRealList(text);
  if (values.size() != 3) throw InvalidArgument("split needs three values: train,val,test");
  SplitSpec spec;
  spec.seed = seed;
  spec.stratify = stratify;
  const bool integral = std::none_of(parts.begin(), parts.end(), [](const std::string& p) {
    return p.find_first_of(".eE") != std::string::npos;
  });
  if (integral) {
    spec.counts = std::array<size_t, 3>{static_cast<size_t>(values[0]),
                                        static_cast<size_t>(values[1]),
                                        static_cast<size_t>(values[2])};
  } else {
    spec.fractions = std::array<double, 3>{values[0], values[1], values[2]};
  }
  return spec;
}

std::string FormatTruth(const TieGroupedOrder& truth, const std::vector<std::string>& names) {
  std::string out = "# ground-truth feature order; ';' separates groups, ',' joins ties\n";
  for (size_t g = 0; g < truth.groups.size(); ++g) {
    if (g > 0) out += ';';
    for (size_t i = 0; i < truth.groups[g].size(); ++i) {
      if (i > 0) out += ',';
      out += names.at(truth.groups[g][i]);
    }
  }
  return out + "\n";
}

TieGroupedOrder ParseTruth(const std::string& text, const std::vector<std::string>& names) {
  TieGroupedOrder truth;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = Trimmed(line);
    if (line.empty() || line.front() == '#') continue;
    for (const std::string& group : SplitOn(line, ';')) {
      if (group.empty()) continue;
      std::vector<size_t> members;
      for (const std::string& name : SplitOn(group, ',')) {
        if (!name.empty()) members.push_back(FeatureIndex(names, name));
      }
      truth.groups.push_back(std::move(members));
    }
  }
  truth.ValidateCovers(names.size());
  return truth;
}

PreparedData LoadPrepared(const fs::path& dir) {
  const fs::path summary_path = dir / "summary.json";
  if (!fs::exists(summary_path)) {
    throw IoError("no prepared data in " + dir.string() + " (summary.json missing; run prep or synth)");
  }
  ojson summary;
  try {
    summary = ojson::parse(ReadFile(summary_path));
  } catch (const ojson::exception& e) {
    throw FormatError("summary.json: " + std::string(e.what()));
  }
  PreparedData data;
  const int classes = summary.at("num_classes").get<int>();
  data.classes = summary.at("classes").get<std::vector<std::string>>();
  data.train = EncodedFromCsv(ReadFile(dir / kSplitFiles[0]), classes);
  data.validation = EncodedFromCsv(ReadFile(dir / kSplitFiles[1]), classes);
  data.test = EncodedFromCsv(ReadFile(dir / kSplitFiles[2]), classes);
  if (data.validation.feature_names != data.train.feature_names ||
      data.test.feature_names != data.train.feature_names) {
    throw FormatError("prepared splits disagree on feature names");
  }
  if (fs::exists(dir / "truth.txt")) {
    data.truth = ParseTruth(ReadFile(dir / "truth.txt"), data.train.feature_names);
    data.train.planted_truth = data.validation.planted_truth = data.test.planted_truth = data.truth;
  }
  if (fs::exists(dir / "encoder.json")) data.encoder_path = dir / "encoder.json";
  return data;
}

DatasetSummary CmdPrep(const PrepOptions& options) {
  CsvOptions csv;
  csv.delimiter = options.delimiter;
  const RawTable raw = LoadCsv(options.data, options.label_column, {}, csv);
  const RawTable clean = DropMissing(raw);
  const EncoderSpec encoder = FitEncoder(clean);
  const EncodedDataset encoded = ApplyEncoder(encoder, clean);
  encoded.Validate();
  const SplitResult split = Split(encoded, options.split);

  std::vector<std::string> warnings = encoder.warnings;
  warnings.insert(warnings.end(), split.warnings.begin(), split.warnings.end());

  OutputSet out;
  AddSplits(out, split);
  out.Add("encoder.json", encoder.ToJson());
  out.Add("summary.json", SummaryJson(split, encoder.classes, options.split, warnings));
  std::string log = LogLine("prep: read " + std::to_string(raw.num_rows()) + " rows, kept " +
                            std::to_string(clean.num_rows()) + " after dropping missing values");
  for (const auto& w : warnings) log += LogLine("warning: " + w);
  out.Add("run.log", log);
  out.Commit(options.out);
  return Summarize(split, warnings);
}

DatasetSummary CmdSynth(const SynthOptions& options) {
  const EncodedDataset ds = SynthDataset(options.n, options.d, options.k, options.noise, options.seed);
  SplitSpec spec;
  spec.fractions = options.fractions;
  spec.seed = options.seed;
  const SplitResult split = Split(ds, spec);

  OutputSet out;
  AddSplits(out, split);
  out.Add("summary.json", SummaryJson(split, {"0", "1"}, spec, split.warnings));
  out.Add("truth.txt", FormatTruth(*ds.planted_truth, ds.feature_names));
  out.Commit(options.out);
  return Summarize(split, split.warnings);
}

TrainConfig TrainConfigFromJson(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  const ojson& c = doc.contains("config") ? doc.at("config") : doc;
  try {
    TrainConfig config;
    config.kind = ParseModelKind(c.at("model").get<std::string>());
    config.learning_rate = c.at("learning_rate").get<double>();
    config.batch_size = c.at("batch_size").get<size_t>();
    config.max_epochs = c.at("max_epochs").get<size_t>();
    config.patience = c.at("patience").get<size_t>();
    config.seed = c.at("seed").get<uint64_t>();
    config.r = c.at("r").get<double>();
    if (!c.at("hidden_size").is_null()) config.hidden_size = c.at("hidden_size").get<size_t>();
    config.adam.beta1 = c.at("adam_beta1").get<double>();
    config.adam.beta2 = c.at("adam_beta2").get<double>();
    config.adam.epsilon = c.at("adam_epsilon").get<double>();
    config.Validate();
    return config;
  } catch (const ojson::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
}

TrainOutcome CmdTrain(const TrainOptions& options) {
  const Stopwatch watch;
  const PreparedData data = LoadPrepared(options.data);
  const TrainConfig& config = options.config;
  config.Validate();

  TrainResult trained = TrainFromScratch(data.train, data.validation, config);
  trained.params.encoder_ref = data.encoder_path.string();
  const double train_seconds = watch.Seconds();

  TrainOutcome outcome;
  outcome.params = trained.params;
  outcome.history = trained.history;
  const MetricsReport train_metrics = Evaluate(trained.params, data.train);
  const MetricsReport val_metrics = Evaluate(trained.params, data.validation);
  outcome.test_metrics = Evaluate(trained.params, data.test);

  const std::vector<std::string>& names = data.train.feature_names;
  const size_t d = names.size();
  ojson report;
  report["artifact_version"] = kArtifactVersion;
  report["command"] = "train";
  report["seed"] = config.seed;
  report["config"] = ojson::parse(config.ToJson());
  report["dataset"] = {{"train", SplitSummary(data.train)},
                       {"validation", SplitSummary(data.validation)},
                       {"test", SplitSummary(data.test)}};
  report["metrics"] = {{"train", MetricsJson(train_metrics)},
                       {"validation", MetricsJson(val_metrics)},
                       {"test", MetricsJson(outcome.test_metrics)}};
  report["history"] = {{"epochs_run", trained.history.epochs.size()},
                       {"best_epoch", trained.history.best_epoch},
                       {"stop_reason", StopReasonName(trained.history.stop_reason)},
                       {"exp_clamps", trained.history.exp_clamps}};

  OutputSet out;
  std::string log = LogLine("train: " + std::string(ModelKindName(config.kind)) + " finished " +
                            std::to_string(trained.history.epochs.size()) + " epochs in " +
                            std::to_string(train_seconds) + "s");
  if (trained.history.exp_clamps > 0) {
    log += LogLine("warning: exp argument clamped " + std::to_string(trained.history.exp_clamps) +
                   " times at r*w > " + FormatReal(kExpArgumentCap));
  }

  if (config.kind == ModelKind::kIfeNet) {
    outcome.ranking = GlobalRanking(ImportanceScores(trained.params, data.train.x));
    std::vector<size_t> order;
    for (const FeatureScore& f : outcome.ranking) order.push_back(f.feature);
    report["ranking"] = RankingJson(outcome.ranking, names);
    out.Add("ranking.csv", RankingCsv(outcome.ranking, names));

    ojson oracle;
    std::vector<double> grades;
    if (data.truth) {
      oracle["kind"] = "planted";
      grades = GradesFromRanking(*data.truth, d);
    } else {
      const uint64_t oracle_seed = DeriveSeed(config.seed, "oracle");
      const PermutationImportance pi = ComputePermutationImportance(
          trained.params, data.train, options.oracle_repeats, oracle_seed);
      oracle["kind"] = "permutation";
      oracle["repeats"] = options.oracle_repeats;
      oracle["importance"] = pi.importance;
      oracle["spearman"] = RankCorrelation(order, pi.order);
      grades = GradesFromRanking(TieGroupedOrder{[&] {
                                   std::vector<std::vector<size_t>> groups;
                                   for (const size_t f : pi.order) groups.push_back({f});
                                   return groups;
                                 }()},
                                 d);
    }
    const std::vector<NdcgPoint> curve = NdcgCurve(order, grades, AllK(d));
    oracle["ndcg"] = NdcgJson(curve);
    report["oracle"] = oracle;
    out.Add("ndcg.csv", NdcgCsv(curve));
  }

  out.Add("checkpoint.txt", SerializeCheckpoint(trained.params));
  out.Add("history.csv", trained.history.ToCsv());
  if (options.format == Format::kJson) {
    out.Add("report.json", report.dump(2) + "\n");
  } else {
    std::string csv = "split,accuracy,precision_macro,recall_macro,f1_macro\n";
    const MetricsReport* reports[3] = {&train_metrics, &val_metrics, &outcome.test_metrics};
    for (int s = 0; s < 3; ++s) {
      csv += std::string(kSplitNames[s]) + "," + FormatReal(reports[s]->accuracy) + "," +
             FormatReal(reports[s]->precision_macro) + "," + FormatReal(reports[s]->recall_macro) +
             "," + FormatReal(reports[s]->f1_macro) + "\n";
    }
    out.Add("report.csv", csv);
  }
  log += LogLine("train: total wall time " + std::to_string(watch.Seconds()) + "s");
  out.Add("run.log", log);
  out.Commit(options.out);
  return outcome;
}

std::vector<FeatureScore> CmdRank(const RankOptions& options) {
  const IfeNetParams params = LoadCheckpoint(options.checkpoint);
  const PreparedData data = LoadPrepared(options.data);
  const EncodedDataset& split = PickSplit(data, options.split);
  if (split.d() != static_cast<Eigen::Index>(params.d)) {
    throw ShapeError("rank: checkpoint expects d=" + std::to_string(params.d) + " but data has d=" +
                     std::to_string(split.d()));
  }
  const Matrix scores = ImportanceScores(params, split.x);
  const std::vector<FeatureScore> ranking = GlobalRanking(scores);
  const auto& names = split.feature_names;

  OutputSet out;
  out.Add("ranking.csv", RankingCsv(ranking, names));
  if (options.format == Format::kJson) {
    ojson doc;
    doc["split"] = options.split;
    doc["ranking"] = RankingJson(ranking, names);
    out.Add("ranking.json", doc.dump(2) + "\n");
  }
  if (options.per_instance) {
    std::string csv;
    for (size_t j = 0; j < names.size(); ++j) csv += (j ? "," : "") + names[j];
    csv += "\n";
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        csv += (c ? "," : "") + FormatReal(scores(r, c));
      }
      csv += "\n";
    }
    out.Add("scores.csv", csv);
  }
  out.Commit(options.out);
  return ranking;
}

std::vector<NdcgPoint> CmdEvalRanking(const EvalRankingOptions& options) {
  const std::string text = ReadFile(options.ranking);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (Trimmed(line) != "rank,feature,score") {
    throw FormatError("ranking file must start with header 'rank,feature,score'");
  }
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    line = Trimmed(line);
    if (line.empty()) continue;
    const auto cells = SplitOn(line, ',');
    if (cells.size() != 3) throw FormatError("ranking file: malformed row '" + line + "'");
    names.push_back(cells[1]);
  }
  // Predicted order is the file order; feature indices follow it.
  std::vector<size_t> order(names.size());
  std::iota(order.begin(), order.end(), size_t{0});
  TieGroupedOrder truth;
  try {
    truth = ParseTruth(ReadFile(options.truth), names);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("ranking and truth cover different features: ") + e.what());
  }
  const std::vector<double> grades = GradesFromRanking(truth, names.size());
  const std::vector<size_t> ks = options.k_list.empty() ? AllK(names.size()) : options.k_list;
  const std::vector<NdcgPoint> curve = NdcgCurve(order, grades, ks);

  OutputSet out;
  out.Add("ndcg.csv", NdcgCsv(curve));
  if (options.format == Format::kJson) {
    ojson doc;
    doc["ndcg"] = NdcgJson(curve);
    out.Add("ndcg.json", doc.dump(2) + "\n");
  }
  out.Commit(options.out);
  return curve;
}

std::vector<SweepRow> CmdSweepR(const SweepOptions& options) {
  const Stopwatch watch;
  const PreparedData data = LoadPrepared(options.data);
  options.base.Validate();
  const std::vector<SweepRow> rows = SweepAmplification(options.r_values, options.base, data.train,
                                                        data.validation, data.test, options.threads);
  OutputSet out;
  out.Add("sweep.csv", SweepToCsv(rows));
  if (options.format == Format::kJson) {
    ojson doc;
    doc["config"] = ojson::parse(options.base.ToJson());
    ojson arr = ojson::array();
    for (const SweepRow& r : rows) {
      arr.push_back({{"r", r.r},
                     {"test_accuracy", r.test_accuracy},
                     {"validation_accuracy", r.validation_accuracy},
                     {"best_epoch", r.best_epoch}});
    }
    doc["rows"] = arr;
    out.Add("sweep.json", doc.dump(2) + "\n");
  }
  out.Add("run.log", LogLine("sweep-r: " + std::to_string(rows.size()) + " models in " +
                             std::to_string(watch.Seconds()) + "s"));
  out.Commit(options.out);
  return rows;
}

SearchResult CmdTune(const TuneOptions& options) {
  const Stopwatch watch;
  const PreparedData data = LoadPrepared(options.data);
  options.base.Validate();
  const SearchResult result = RandomSearch(SearchSpace::IfeNet(), options.trials, options.base,
                                           data.train, data.validation, options.seed,
                                           options.threads);
  ojson best;
  best["trial"] = result.best_index;
  best["validation_accuracy"] = result.trials[result.best_index].validation_accuracy;
  best["config"] = ojson::parse(result.best_config.ToJson());

  OutputSet out;
  out.Add("trials.csv", result.ToCsv());
  out.Add("best_config.json", best.dump(2) + "\n");
  out.Add("run.log", LogLine("tune: " + std::to_string(options.trials) + " trials in " +
                             std::to_string(watch.Seconds()) + "s"));
  out.Commit(options.out);
  return result;
}

namespace {

void AddTrainFlags(CLI::App* cmd, TrainConfig& config, std::optional<size_t>& hidden, bool& ablation) {
  cmd->add_option("--lr", config.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--batch-size", config.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--hidden", hidden, "Hidden units (default: d)");
  cmd->add_option("--r", config.r, "Amplification coefficient")->capture_default_str();
  cmd->add_option("--epochs", config.max_epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--patience", config.patience, "Early-stopping patience")->capture_default_str();
  cmd->add_option("--seed", config.seed, "Top-level seed")->capture_default_str();
  cmd->add_flag("--ablation", ablation, "Train the plain FNN (no IFE module)");
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"IFENet: iterative feature exclusion ranking for tabular classification"};
  app.require_subcommand(1);

  std::string format_name = "json";
  std::optional<size_t> hidden;
  bool ablation = false;

  // prep
  PrepOptions prep;
  std::string prep_split = "0.75,0.1,0.15";
  bool no_stratify = false;
  std::string delimiter = ",";
  uint64_t prep_seed = 0;
  auto* prep_cmd = app.add_subcommand("prep", "Clean, one-hot encode and split a raw CSV");
  prep_cmd->add_option("--data", prep.data, "Raw CSV file")->required()->check(CLI::ExistingFile);
  prep_cmd->add_option("--label-col", prep.label_column, "Label column")->required();
  prep_cmd->add_option("--out", prep.out, "Output directory")->required();
  prep_cmd->add_option("--split", prep_split, "train,val,test fractions or absolute counts")
      ->capture_default_str();
  prep_cmd->add_option("--seed", prep_seed, "Split seed")->capture_default_str();
  prep_cmd->add_flag("--no-stratify", no_stratify, "Disable stratified splitting");
  prep_cmd->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();

  // synth
  SynthOptions synth;
  std::string synth_split = "0.7,0.15,0.15";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a dataset with a planted feature ranking");
  synth_cmd->add_option("--n", synth.n, "Instances")->capture_default_str();
  synth_cmd->add_option("--d", synth.d, "Features")->capture_default_str();
  synth_cmd->add_option("--k", synth.k, "Informative features")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Label noise scale")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--split", synth_split, "train,val,test fractions")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  // train
  TrainOptions train;
  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "Train IFENet (or the FNN ablation)");
  train_cmd->add_option("--data", train.data, "Prepared data directory")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--config", config_path,
                        "Resolved config (report.json or best_config.json); flags are ignored");
  train_cmd->add_option("--format", format_name, "Report format: csv or json")
      ->capture_default_str();
  AddTrainFlags(train_cmd, train.config, hidden, ablation);

  // rank
  RankOptions rank;
  std::string rank_format = "csv";
  auto* rank_cmd = app.add_subcommand("rank", "Emit the global feature ranking of a checkpoint");
  rank_cmd->add_option("--checkpoint", rank.checkpoint, "Checkpoint file")->required();
  rank_cmd->add_option("--data", rank.data, "Prepared data directory")->required();
  rank_cmd->add_option("--split", rank.split, "train, val or test")->capture_default_str();
  rank_cmd->add_option("--out", rank.out, "Output directory")->required();
  rank_cmd->add_flag("--per-instance", rank.per_instance, "Also write per-instance scores");
  rank_cmd->add_option("--format", rank_format, "csv or json")->capture_default_str();

  // eval-ranking
  EvalRankingOptions eval;
  std::string k_list;
  std::string eval_format = "csv";
  auto* eval_cmd = app.add_subcommand("eval-ranking", "NDCG@K of a ranking against a truth file");
  eval_cmd->add_option("--ranking", eval.ranking, "ranking.csv")->required();
  eval_cmd->add_option("--truth", eval.truth, "Truth file")->required();
  eval_cmd->add_option("--k-list", k_list, "Comma-separated K values (default 1..d)");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--format", eval_format, "csv or json")->capture_default_str();

  // sweep-r
  SweepOptions sweep;
  std::string r_list = "1,2,3,4,5,6,7,8";
  std::string sweep_format = "csv";
  auto* sweep_cmd = app.add_subcommand("sweep-r", "Test accuracy as a function of r");
  sweep_cmd->add_option("--data", sweep.data, "Prepared data directory")->required();
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
  sweep_cmd->add_option("--r-list", r_list, "Comma-separated r values")->capture_default_str();
  sweep_cmd->add_option("--format", sweep_format, "csv or json")->capture_default_str();
  AddTrainFlags(sweep_cmd, sweep.base, hidden, ablation);

  // tune
  TuneOptions tune;
  auto* tune_cmd = app.add_subcommand("tune", "Random search over the IFENet hyperparameter space");
  tune_cmd->add_option("--data", tune.data, "Prepared data directory")->required();
  tune_cmd->add_option("--out", tune.out, "Output directory")->required();
  tune_cmd->add_option("--trials", tune.trials, "Number of trials")->capture_default_str();
  AddTrainFlags(tune_cmd, tune.base, hidden, ablation);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const size_t threads = DefaultThreadCount();
    if (prep_cmd->parsed()) {
      prep.split = ParseSplit(prep_split, prep_seed, !no_stratify);
      if (delimiter.size() != 1) throw InvalidArgument("--delimiter must be one character");
      prep.delimiter = delimiter.front();
      const DatasetSummary s = CmdPrep(prep);
      std::cout << "n(train,val,test)=" << s.sizes[0] << "," << s.sizes[1] << "," << s.sizes[2]
                << " d=" << s.d << " C=" << s.num_classes << "\n";
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    } else if (synth_cmd->parsed()) {
      const auto f = ParseRealList(synth_split);
      if (f.size() != 3) throw InvalidArgument("--split needs three fractions");
      synth.fractions = {f[0], f[1], f[2]};
      const DatasetSummary s = CmdSynth(synth);
      std::cout << "n(train,val,test)=" << s.sizes[0] << "," << s.sizes[1] << "," << s.sizes[2]
                << " d=" << s.d << " C=" << s.num_classes << "\n";
    } else if (train_cmd->parsed()) {
      if (!config_path.empty()) {
        train.config = TrainConfigFromJson(ReadFile(config_path));
      } else {
        train.config.hidden_size = hidden;
        train.config.kind = ablation ? ModelKind::kFnn : ModelKind::kIfeNet;
      }
      train.format = ParseFormat(format_name);
      const TrainOutcome o = CmdTrain(train);
      std::printf("test accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f (best epoch %zu)\n",
                  o.test_metrics.accuracy, o.test_metrics.precision_macro,
                  o.test_metrics.recall_macro, o.test_metrics.f1_macro, o.history.best_epoch);
    } else if (rank_cmd->parsed()) {
      rank.format = ParseFormat(rank_format);
      const auto ranking = CmdRank(rank);
      std::cout << "ranked " << ranking.size() << " features\n";
    } else if (eval_cmd->parsed()) {
      if (!k_list.empty()) eval.k_list = ParseCountList(k_list);
      eval.format = ParseFormat(eval_format);
      for (const NdcgPoint& p : CmdEvalRanking(eval)) {
        std::printf("NDCG@%zu=%.4f\n", p.k, p.ndcg);
      }
    } else if (sweep_cmd->parsed()) {
      sweep.r_values = ParseRealList(r_list);
      sweep.base.hidden_size = hidden;
      sweep.threads = threads;
      sweep.format = ParseFormat(sweep_format);
      for (const SweepRow& row : CmdSweepR(sweep)) {
        std::printf("r=%g test_accuracy=%.4f\n", row.r, row.test_accuracy);
      }
    } else if (tune_cmd->parsed()) {
      tune.base.hidden_size = hidden;
      tune.seed = tune.base.seed;
      tune.threads = threads;
      const SearchResult r = CmdTune(tune);
      std::printf("best trial %zu: validation accuracy %.4f\n%s\n", r.best_index,
                  r.trials[r.best_index].validation_accuracy, r.best_config.ToJson().c_str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ifenet::cli
