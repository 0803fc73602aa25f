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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "cli/commands.h"
#include "ifenet/ife.h"
#include "ifenet/io.h"
#include "ifenet/metrics.h"
#include "ifenet/model.h"
#include "ifenet/train.h"
#include "support/oracles.h"

namespace {

namespace fs = std::filesystem;
using namespace ifenet;
using ifenet::testing::FiniteDifferences;
using ifenet::testing::Grid;
using ifenet::testing::HandDcg;
using ifenet::testing::RandomMatrix;
using ifenet::testing::ReferenceIfeForward;
using ifenet::testing::RelativeError;
using ifenet::testing::ToGrid;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string Join(const std::vector<double>& v, const char* fmt = "%.3f") {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + Fmt(fmt, v[i]);
  return out;
}

// Fresh parameters with random affine batch-norm terms and IFE units.
IfeNetParams RandomModel(std::mt19937_64& gen, size_t d, int c, size_t h, double r, uint64_t seed) {
  IfeNetParams p = InitParams(d, c, h, r, seed);
  const auto n = static_cast<Eigen::Index>(d);
  p.bn.gamma = RandomMatrix(gen, 1, n, 0.5, 1.5);
  p.bn.beta = RandomMatrix(gen, 1, n, -0.5, 0.5);
  return p;
}

struct PropertyTally {
  double worst_row_sum = 0.0;
  size_t rows = 0;

  void Check(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      worst_row_sum = std::max(worst_row_sum, std::abs(m.row(r).sum() - 1.0));
      ++rows;
    }
  }
  void Check(const Tape& tape, const IfeActivations& act) {
    Check(tape.value(act.scores));
    for (const ValueId z : act.class_probs) Check(tape.value(z));
  }
};

PropertyTally g_tally;

Outcome GradientCorrectness() {
  std::mt19937_64 gen(20240601);
  const size_t ds[] = {3, 4, 5};
  const int cs[] = {2, 3};
  const Eigen::Index bs[] = {2, 3, 4};
  const double rs[] = {1.0, 3.0, 5.0};
  double worst = 0.0;
  size_t instances = 0;
  size_t entries = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const size_t d = ds[trial % 3];
    const int c = cs[(trial / 3) % 2];
    const Eigen::Index batch = bs[(trial / 6) % 3];
    const double r = rs[(trial + trial / 3) % 3];
    IfeNetParams p = RandomModel(gen, d, c, 2 + trial % 4, r, 1000 + trial);
    const Matrix x = RandomMatrix(gen, batch, static_cast<Eigen::Index>(d), -2.0, 2.0);
    std::vector<int> y(static_cast<size_t>(batch));
    for (auto& label : y) label = static_cast<int>(gen() % static_cast<uint64_t>(c));

    Tape tape;
    const ParamHandles h = RegisterParameters(tape, p);
    const ForwardResult fwd = ForwardOnTape(tape, x, p, h, Mode::kTrain);
    g_tally.Check(tape, *fwd.ife);
    const GradientMap g = tape.Backward(tape.CrossEntropyLoss(fwd.logits, y));
    const std::vector<ValueId> ids = h.All();

    auto loss = [&] { return BatchLoss(p, x, y); };
    const std::vector<Matrix*> tensors = p.Trainable();
    for (size_t t = 0; t < tensors.size(); ++t) {
      const Matrix numeric = FiniteDifferences(loss, *tensors[t], 1e-5);
      const Matrix& analytic = g.at(ids[t]);
      for (Eigen::Index i = 0; i < numeric.size(); ++i) {
        worst = std::max(worst, RelativeError(analytic.data()[i], numeric.data()[i]));
        ++entries;
      }
    }
    ++instances;
  }
  return {worst < 1e-4 && instances >= 20,
          "max relative error " + Fmt("%.2e", worst) + " over " + std::to_string(instances) +
              " instances (" + std::to_string(entries) + " partials, eps=1e-5)"};
}

Outcome OracleEquivalence() {
  std::mt19937_64 gen(77);
  double worst_s = 0.0;
  double worst_z = 0.0;
  double worst_a = 0.0;
  size_t instances = 0;
  for (Eigen::Index d = 2; d <= 8; ++d) {
    for (Eigen::Index c = 2; c <= 4; ++c) {
      for (int rep = 0; rep < 3; ++rep) {
        const double r = 1.0 + 2.0 * rep;
        const Eigen::Index batch = 1 + (d + c + rep) % 4;
        const Matrix x = RandomMatrix(gen, batch, d, -3.0, 3.0);
        std::vector<Matrix> units;
        std::vector<Grid> grids;
        Tape tape;
        std::vector<ValueId> ids;
        for (Eigen::Index j = 0; j < d; ++j) {
          units.push_back(RandomMatrix(gen, d, c, -1.0, 1.0));
          grids.push_back(ToGrid(units.back()));
          ids.push_back(tape.Parameter(units.back()));
        }
        const IfeActivations act = IfeForward(tape, tape.Constant(x), ids, r);
        g_tally.Check(tape, act);
        const auto ref = ReferenceIfeForward(ToGrid(x), grids, r);
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (Eigen::Index i = 0; i < d; ++i) {
            worst_s = std::max(worst_s, std::abs(tape.value(act.scores)(b, i) - ref.scores[b][i]));
          }
          for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = 0; k < c; ++k) {
              worst_z = std::max(worst_z, std::abs(tape.value(act.class_probs[j])(b, k) -
                                                   ref.class_probs[j][b][k]));
            }
            for (Eigen::Index i = 0; i < d; ++i) {
              const double want = ref.amplified[j][b][i];
              worst_a = std::max(worst_a, std::abs(tape.value(act.amplified[j])(b, i) - want) / want);
            }
          }
        }
        ++instances;
      }
    }
  }
  const bool pass = instances >= 50 && worst_s <= 1e-12 && worst_z <= 1e-12 && worst_a <= 1e-12;
  return {pass, std::to_string(instances) + " instances up to d=8, C=4; max |dS| " +
                    Fmt("%.1e", worst_s) + ", max |dz| " + Fmt("%.1e", worst_z) +
                    ", max rel |da| " + Fmt("%.1e", worst_a)};
}

Outcome NormalizationInvariants() {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 60; ++trial) {
    const size_t d = 2 + trial % 11;
    const int c = 2 + trial % 4;
    const IfeParams params = [&] {
      IfeParams p = IfeParams::Init(d, c, 1.0 + trial % 8, 300 + trial);
      for (Matrix& w : p.units) w *= 1.0 + trial % 5;
      return p;
    }();
    const Matrix x = RandomMatrix(gen, 5, static_cast<Eigen::Index>(d), -5.0, 5.0);
    Tape tape;
    std::vector<ValueId> ids;
    for (const Matrix& w : params.units) ids.push_back(tape.Parameter(w));
    g_tally.Check(tape, IfeForward(tape, tape.Constant(x), ids, params.r));
  }
  bool masks_ok = true;
  for (size_t d = 2; d <= 32; ++d) {
    const MaskBank bank = BuildMasks(d);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
      double excluded = 0.0;
      for (size_t j = 0; j < d; ++j) excluded += 1.0 - bank.mask(j)(i);
      masks_ok = masks_ok && excluded == 1.0 && bank.mask(static_cast<size_t>(i))(i) == 0.0;
    }
  }
  const bool pass = masks_ok && g_tally.worst_row_sum <= 1e-12 && g_tally.rows > 0;
  return {pass, std::to_string(g_tally.rows) + " z/S rows, max |row sum - 1| " +
                    Fmt("%.1e", g_tally.worst_row_sum) + "; mask banks d=2..32 " +
                    (masks_ok ? "exclude each feature once" : "INVALID")};
}

Outcome PlantedRecovery(const fs::path& work) {
  std::vector<double> ndcg3;
  size_t exact_top3 = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    cli::SynthOptions s;
    s.n = 1000;
    s.d = 10;
    s.k = 3;
    s.noise = 0.1;
    s.seed = seed;
    s.out = work / ("planted" + std::to_string(seed));
    cli::CmdSynth(s);
    cli::TrainOptions t;
    t.data = s.out;
    t.config.seed = seed;
    t.out = s.out / "run";
    const cli::TrainOutcome o = cli::CmdTrain(t);
    std::vector<size_t> order;
    for (const FeatureScore& f : o.ranking) order.push_back(f.feature);
    const cli::PreparedData data = cli::LoadPrepared(s.out);
    ndcg3.push_back(NdcgAtK(order, GradesFromRanking(*data.truth, 10), 3));
    const std::set<size_t> top(order.begin(), order.begin() + 3);
    exact_top3 += top == std::set<size_t>{0, 1, 2} ? 1 : 0;
  }
  const double median = Median(ndcg3);
  return {median >= 0.9 && exact_top3 >= 3,
          "median NDCG@3 " + Fmt("%.4f", median) + " (per seed " + Join(ndcg3) + "), top-3 = planted in " +
              std::to_string(exact_top3) + "/5 seeds"};
}

struct SuiteResult {
  std::vector<double> fnn;                    // per seed
  std::map<double, std::vector<double>> ife;  // r -> per seed
};

// Synthetic suite shared by the ablation and amplification criteria.
SuiteResult RunSuite(const fs::path& work) {
  SuiteResult out;
  const std::vector<double> grid = {1, 2, 3, 4, 5, 6, 7, 8};
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    cli::SynthOptions s;
    s.n = 2000;
    s.d = 12;
    s.k = 3;
    s.noise = 0.3;
    s.seed = seed;
    s.out = work / ("suite" + std::to_string(seed));
    cli::CmdSynth(s);

    cli::TrainOptions fnn;
    fnn.data = s.out;
    fnn.config.seed = seed;
    fnn.config.kind = ModelKind::kFnn;
    fnn.out = s.out / "fnn";
    out.fnn.push_back(cli::CmdTrain(fnn).test_metrics.accuracy);

    cli::SweepOptions sweep;
    sweep.data = s.out;
    sweep.r_values = grid;
    sweep.base.seed = seed;
    sweep.threads = DefaultThreadCount();
    sweep.out = s.out / "sweep";
    for (const SweepRow& row : cli::CmdSweepR(sweep)) out.ife[row.r].push_back(row.test_accuracy);
  }
  return out;
}

Outcome AblationDirection(const SuiteResult& suite) {
  const double fnn = Median(suite.fnn);
  const double ife = Median(suite.ife.at(3.0));
  return {ife >= fnn - 0.01, "median test accuracy IFENet " + Fmt("%.4f", ife) + " vs FNN " +
                                 Fmt("%.4f", fnn) + " (IFENet " + Join(suite.ife.at(3.0)) +
                                 "; FNN " + Join(suite.fnn) + ")" +
                                 (ife > fnn ? ", strict improvement" : ", no strict improvement")};
}

Outcome AmplificationTrend(const SuiteResult& suite) {
  std::map<double, double> med;
  for (const auto& [r, accs] : suite.ife) med[r] = Median(accs);
  double best_mid = 0.0;
  for (double r = 2; r <= 6; ++r) best_mid = std::max(best_mid, med.at(r));
  double hi = 0.0;
  double lo = 1.0;
  for (double r = 6; r <= 8; ++r) {
    hi = std::max(hi, med.at(r));
    lo = std::min(lo, med.at(r));
  }
  std::vector<double> curve;
  for (const auto& [r, m] : med) curve.push_back(m);
  const bool complete = med.size() == 8;
  return {complete && best_mid >= med.at(1.0) && hi - lo < 0.05,
          "median accuracy by r=1..8: " + Join(curve) + "; max over r=2..6 " + Fmt("%.4f", best_mid) +
              " vs r=1 " + Fmt("%.4f", med.at(1.0)) + "; spread over r>=6 " + Fmt("%.4f", hi - lo)};
}

Outcome TitanicReproduction(const fs::path& data_dir, const fs::path& work) {
  const fs::path raw = data_dir / "titanic.csv";
  if (!fs::exists(raw)) return {false, "missing " + raw.string()};
  cli::PrepOptions prep;
  prep.data = raw;
  prep.label_column = "survived";
  prep.split = cli::ParseSplit("785,66,195", 0, true);
  prep.out = work / "titanic";
  const cli::DatasetSummary summary = cli::CmdPrep(prep);

  cli::TuneOptions tune;
  tune.data = prep.out;
  tune.trials = 50;
  tune.seed = 0;
  tune.threads = DefaultThreadCount();
  tune.out = prep.out / "tune";
  cli::CmdTune(tune);

  cli::TrainOptions train;
  train.data = prep.out;
  train.config = cli::TrainConfigFromJson(ReadFile(tune.out / "best_config.json"));
  train.out = prep.out / "run";
  const cli::TrainOutcome o = cli::CmdTrain(train);
  const double acc = o.test_metrics.accuracy;
  const double f1 = o.test_metrics.f1_macro;
  return {acc >= 0.77 && std::abs(f1 - 0.78) <= 0.05,
          "d=" + std::to_string(summary.d) + ", split 785/66/195, 50 tuning trials: test accuracy " +
              Fmt("%.4f", acc) + " (target >= 0.77, reported 0.800), macro F " + Fmt("%.4f", f1) +
              " (target 0.78 +/- 0.05)"};
}

Outcome MetricsExactness() {
  std::mt19937_64 gen(8);
  size_t matrices = 0;
  bool exact = true;
  for (int trial = 0; trial < 12; ++trial) {
    const int classes = 2 + trial % 4;
    ConfusionMatrix cm(classes);
    std::vector<std::vector<long>> cells(classes, std::vector<long>(classes));
    for (int t = 0; t < classes; ++t) {
      for (int p = 0; p < classes; ++p) {
        // Leave some classes unpredicted to exercise the 0/0 rule.
        cells[t][p] = (trial % 3 == 0 && p == classes - 1) ? 0 : static_cast<long>(gen() % 20);
        cm.Add(t, p, cells[t][p]);
      }
    }
    cells[0][0] += 1;
    cm.Add(0, 0, 1);

    long total = 0;
    long diag = 0;
    double p_sum = 0.0;
    double r_sum = 0.0;
    double f_sum = 0.0;
    for (int c = 0; c < classes; ++c) {
      long tp = cells[c][c];
      long col = 0;
      long row = 0;
      for (int k = 0; k < classes; ++k) {
        col += cells[k][c];
        row += cells[c][k];
        total += cells[c][k];
      }
      diag += tp;
      const double precision = col == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col);
      const double recall = row == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(row);
      const double f = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
      p_sum += precision;
      r_sum += recall;
      f_sum += f;
    }
    const MetricsReport m = ClassificationMetrics(cm);
    exact = exact && m.accuracy == static_cast<double>(diag) / static_cast<double>(total) &&
            m.precision_macro == p_sum / classes && m.recall_macro == r_sum / classes &&
            m.f1_macro == f_sum / classes;
    ++matrices;
  }

  double worst = 0.0;
  const std::vector<double> grades3 = {2.0, 1.0, 0.0};
  const double reversed = NdcgAtK(std::vector<size_t>{2, 1, 0}, grades3, 3);
  const double reversed_hand = HandDcg({0.0, 1.0, 2.0}, 3) / HandDcg({2.0, 1.0, 0.0}, 3);
  worst = std::abs(reversed - reversed_hand);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t d = 2 + trial % 10;
    std::vector<double> grades(d);
    for (auto& g : grades) g = static_cast<double>(gen() % 5);
    grades[d - 1] = 1.0;
    std::vector<size_t> order(d);
    for (size_t i = 0; i < d; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), gen);
    std::vector<double> gains;
    for (const size_t f : order) gains.push_back(grades[f]);
    std::vector<double> ideal = grades;
    std::sort(ideal.rbegin(), ideal.rend());
    for (size_t k = 1; k <= d; ++k) {
      worst = std::max(worst, std::abs(NdcgAtK(order, grades, k) - HandDcg(gains, k) / HandDcg(ideal, k)));
    }
  }
  const bool pass = exact && matrices >= 10 && worst <= 1e-12 && std::abs(reversed - 0.6199) < 5e-5;
  return {pass, std::to_string(matrices) + " confusion matrices " + (exact ? "exact" : "MISMATCH") +
                    "; NDCG max |diff| vs hand DCG " + Fmt("%.1e", worst) + "; reversed d=3 NDCG@3 " +
                    Fmt("%.4f", reversed)};
}

std::map<std::string, std::string> DataFiles(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() == "run.log") continue;
    files[fs::relative(entry.path(), dir).string()] = ReadFile(entry.path());
  }
  return files;
}

Outcome Reproducibility(const fs::path& data_dir, const fs::path& work) {
  std::vector<std::string> differing;
  size_t compared = 0;
  auto twice = [&](const std::string& name, const std::function<void(const fs::path&)>& run) {
    const fs::path a = work / "repro" / (name + "_a");
    const fs::path b = work / "repro" / (name + "_b");
    run(a);
    run(b);
    const auto fa = DataFiles(a);
    compared += fa.size();
    if (fa != DataFiles(b) || fa.empty()) differing.push_back(name);
  };
  const fs::path synth = work / "repro" / "synth_a";
  twice("synth", [](const fs::path& out) {
    cli::SynthOptions o;
    o.n = 400;
    o.d = 6;
    o.seed = 11;
    o.out = out;
    cli::CmdSynth(o);
  });
  twice("prep", [&](const fs::path& out) {
    cli::PrepOptions o;
    o.data = data_dir / "titanic.csv";
    o.label_column = "survived";
    o.split = cli::ParseSplit("0.75,0.1,0.15", 11, true);
    o.out = out;
    cli::CmdPrep(o);
  });
  twice("train", [&](const fs::path& out) {
    cli::TrainOptions o;
    o.data = synth;
    o.config.seed = 11;
    o.config.max_epochs = 30;
    o.out = out;
    cli::CmdTrain(o);
  });
  const fs::path checkpoint = work / "repro" / "train_a" / "checkpoint.txt";
  twice("rank", [&](const fs::path& out) {
    cli::RankOptions o;
    o.checkpoint = checkpoint;
    o.data = synth;
    o.per_instance = true;
    o.format = cli::Format::kJson;
    o.out = out;
    cli::CmdRank(o);
  });
  twice("eval-ranking", [&](const fs::path& out) {
    cli::EvalRankingOptions o;
    o.ranking = work / "repro" / "rank_a" / "ranking.csv";
    o.truth = synth / "truth.txt";
    o.format = cli::Format::kJson;
    o.out = out;
    cli::CmdEvalRanking(o);
  });
  twice("sweep-r", [&](const fs::path& out) {
    cli::SweepOptions o;
    o.data = synth;
    o.r_values = {1, 4};
    o.base.seed = 11;
    o.base.max_epochs = 10;
    o.threads = 2;
    o.format = cli::Format::kJson;
    o.out = out;
    cli::CmdSweepR(o);
  });
  twice("tune", [&](const fs::path& out) {
    cli::TuneOptions o;
    o.data = synth;
    o.trials = 3;
    o.seed = 11;
    o.base.max_epochs = 5;
    o.threads = 3;
    o.out = out;
    cli::CmdTune(o);
  });

  const IfeNetParams params = LoadCheckpoint(checkpoint);
  const fs::path copy = work / "repro" / "copy.txt";
  SaveCheckpoint(params, copy);
  const IfeNetParams reloaded = LoadCheckpoint(copy);
  const cli::PreparedData data = cli::LoadPrepared(synth);
  const bool logits_equal = EvalLogits(reloaded, data.test.x) == EvalLogits(params, data.test.x);
  const bool bytes_equal = ReadFile(copy) == ReadFile(checkpoint);

  std::string detail = std::to_string(compared) + " data files across 7 commands ";
  if (differing.empty()) {
    detail += "byte-identical on rerun";
  } else {
    detail += "DIFFER for:";
    for (const auto& d : differing) detail += " " + d;
  }
  detail += "; checkpoint round trip " +
            std::string(logits_equal && bytes_equal ? "bit-identical logits" : "CHANGED logits");
  return {differing.empty() && logits_equal && bytes_equal, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IFENet acceptance checks"};
  std::string data_dir = "data";
  std::vector<int> only;
  bool keep = false;
  app.add_option("--data-dir", data_dir, "Directory holding titanic.csv")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-9)");
  app.add_flag("--keep", keep, "Keep the scratch directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::temp_directory_path() / ("ifenet_acceptance_" + std::to_string(getpid()));
  fs::remove_all(work);
  fs::create_directories(work);

  auto selected = [&](int n) { return only.empty() || std::count(only.begin(), only.end(), n) > 0; };
  std::optional<SuiteResult> suite;
  auto need_suite = [&]() -> const SuiteResult& {
    if (!suite) suite = RunSuite(work);
    return *suite;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", GradientCorrectness},
      {"oracle equivalence", OracleEquivalence},
      {"normalization invariants", NormalizationInvariants},
      {"planted-ranking recovery", [&] { return PlantedRecovery(work); }},
      {"ablation direction", [&] { return AblationDirection(need_suite()); }},
      {"amplification-coefficient trend", [&] { return AmplificationTrend(need_suite()); }},
      {"Titanic reproduction", [&] { return TitanicReproduction(data_dir, work); }},
      {"metrics exactness", MetricsExactness},
      {"reproducibility", [&] { return Reproducibility(data_dir, work); }},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", number,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  if (!keep) fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
