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

#include "ifenet/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ifenet/random.h"
#include "json.hpp"

namespace ifenet {
namespace {

double SafeRatio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes),
      counts_(static_cast<size_t>(std::max(num_classes, 0)) * std::max(num_classes, 0), 0) {
  if (num_classes < 1) throw InvalidArgument("ConfusionMatrix: need at least one class");
}

long ConfusionMatrix::at(int truth, int predicted) const {
  return counts_[static_cast<size_t>(truth) * num_classes_ + predicted];
}

void ConfusionMatrix::Add(int truth, int predicted, long count) {
  if (truth < 0 || truth >= num_classes_ || predicted < 0 || predicted >= num_classes_) {
    throw InvalidArgument("ConfusionMatrix: class out of range [0, " +
                          std::to_string(num_classes_) + ")");
  }
  if (count < 0) throw InvalidArgument("ConfusionMatrix: negative count");
  counts_[static_cast<size_t>(truth) * num_classes_ + predicted] += count;
  total_ += count;
}

long ConfusionMatrix::trace() const {
  long t = 0;
  for (int c = 0; c < num_classes_; ++c) t += at(c, c);
  return t;
}

long ConfusionMatrix::TruePositives(int c) const { return at(c, c); }

long ConfusionMatrix::FalsePositives(int c) const {
  long s = 0;
  for (int t = 0; t < num_classes_; ++t) {
    if (t != c) s += at(t, c);
  }
  return s;
}

long ConfusionMatrix::FalseNegatives(int c) const {
  long s = 0;
  for (int k = 0; k < num_classes_; ++k) {
    if (k != c) s += at(c, k);
  }
  return s;
}

long ConfusionMatrix::TrueNegatives(int c) const {
  return total_ - TruePositives(c) - FalsePositives(c) - FalseNegatives(c);
}

ConfusionMatrix Confusion(std::span<const int> predictions, std::span<const int> labels,
                          int num_classes) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("Confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw InvalidArgument("Confusion: empty inputs");
  ConfusionMatrix cm(num_classes);
  for (size_t i = 0; i < labels.size(); ++i) cm.Add(labels[i], predictions[i]);
  return cm;
}

MetricsReport ClassificationMetrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InvalidArgument("ClassificationMetrics: empty confusion matrix");
  MetricsReport report;
  report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  for (int c = 0; c < cm.num_classes(); ++c) {
    const auto tp = static_cast<double>(cm.TruePositives(c));
    ClassMetrics m;
    m.precision = SafeRatio(tp, tp + static_cast<double>(cm.FalsePositives(c)));
    m.recall = SafeRatio(tp, tp + static_cast<double>(cm.FalseNegatives(c)));
    m.f1 = SafeRatio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.support = cm.TruePositives(c) + cm.FalseNegatives(c);
    report.precision_macro += m.precision;
    report.recall_macro += m.recall;
    report.f1_macro += m.f1;
    report.per_class.push_back(m);
  }
  const auto classes = static_cast<double>(cm.num_classes());
  report.precision_macro /= classes;
  report.recall_macro /= classes;
  report.f1_macro /= classes;
  return report;
}

std::string MetricsReport::ToJson(int indent) const {
  nlohmann::ordered_json doc;
  doc["accuracy"] = accuracy;
  doc["precision_macro"] = precision_macro;
  doc["recall_macro"] = recall_macro;
  doc["f1_macro"] = f1_macro;
  auto classes = nlohmann::ordered_json::array();
  for (size_t c = 0; c < per_class.size(); ++c) {
    classes.push_back({{"class", c},
                       {"precision", per_class[c].precision},
                       {"recall", per_class[c].recall},
                       {"f1", per_class[c].f1},
                       {"support", per_class[c].support}});
  }
  doc["per_class"] = classes;
  return doc.dump(indent);
}

MetricsReport Evaluate(const IfeNetParams& params, const EncodedDataset& dataset) {
  const Prediction p = Predict(params, dataset.x);
  return ClassificationMetrics(Confusion(p.classes, dataset.y, params.num_classes));
}

double Accuracy(const IfeNetParams& params, const EncodedDataset& dataset) {
  const Prediction p = Predict(params, dataset.x);
  size_t hits = 0;
  for (size_t i = 0; i < p.classes.size(); ++i) hits += p.classes[i] == dataset.y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(p.classes.size());
}

double NdcgAtK(std::span<const size_t> predicted_order, std::span<const double> grades, size_t k) {
  const size_t d = grades.size();
  if (predicted_order.size() != d) {
    throw InvalidArgument("NdcgAtK: order covers " + std::to_string(predicted_order.size()) +
                          " items but " + std::to_string(d) + " grades given");
  }
  if (k < 1 || k > d) throw InvalidArgument("NdcgAtK: K must lie in [1, d]");
  for (const double g : grades) {
    if (!(g >= 0.0)) throw InvalidArgument("NdcgAtK: grades must be non-negative");
  }
  for (const size_t f : predicted_order) {
    if (f >= d) throw InvalidArgument("NdcgAtK: feature index out of range");
  }
  std::vector<double> ideal(grades.begin(), grades.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double dcg = 0.0;
  double idcg = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
    dcg += grades[predicted_order[i]] * discount;
    idcg += ideal[i] * discount;
  }
  if (idcg == 0.0) throw InvalidArgument("NdcgAtK: all relevance grades are zero (IDCG = 0)");
  return dcg / idcg;
}

std::vector<double> GradesFromRanking(const TieGroupedOrder& truth, size_t d) {
  truth.ValidateCovers(d);
  std::vector<double> grades(d, 0.0);
  const size_t groups = truth.groups.size();
  for (size_t g = 0; g < groups; ++g) {
    for (const size_t f : truth.groups[g]) grades[f] = static_cast<double>(groups - 1 - g);
  }
  return grades;
}

PermutationImportance ComputePermutationImportance(const IfeNetParams& params,
                                                   const EncodedDataset& dataset, size_t repeats,
                                                   uint64_t seed) {
  if (repeats < 1) throw InvalidArgument("permutation importance: repeats must be >= 1");
  if (dataset.d() != static_cast<Eigen::Index>(params.d)) {
    throw ShapeError("permutation importance: dataset has " + std::to_string(dataset.d()) +
                     " features, model expects " + std::to_string(params.d));
  }
  PermutationImportance out;
  out.baseline_accuracy = Accuracy(params, dataset);
  out.importance.assign(params.d, 0.0);

  EncodedDataset probe = dataset;
  const auto n = static_cast<size_t>(dataset.n());
  for (size_t j = 0; j < params.d; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    double total = 0.0;
    for (size_t rep = 0; rep < repeats; ++rep) {
      Rng rng(DeriveSeed(seed, "permutation", {j, rep}));
      const std::vector<size_t> perm = RandomPermutation(n, rng);
      for (size_t i = 0; i < n; ++i) {
        probe.x(static_cast<Eigen::Index>(i), col) = dataset.x(static_cast<Eigen::Index>(perm[i]), col);
      }
      total += Accuracy(params, probe);
    }
    probe.x.col(col) = dataset.x.col(col);
    out.importance[j] = out.baseline_accuracy - total / static_cast<double>(repeats);
  }

  out.order.resize(params.d);
  std::iota(out.order.begin(), out.order.end(), size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](size_t a, size_t b) {
    return out.importance[a] > out.importance[b];
  });
  return out;
}

double RankCorrelation(std::span<const size_t> order_a, std::span<const size_t> order_b) {
  const size_t n = order_a.size();
  if (order_b.size() != n) throw InvalidArgument("RankCorrelation: orders differ in length");
  if (n < 2) throw InvalidArgument("RankCorrelation: need at least two items");
  std::vector<long> rank_a(n, -1);
  std::vector<long> rank_b(n, -1);
  for (size_t i = 0; i < n; ++i) {
    if (order_a[i] >= n || order_b[i] >= n || rank_a[order_a[i]] != -1 ||
        rank_b[order_b[i]] != -1) {
      throw InvalidArgument("RankCorrelation: orders are not permutations of the same set");
    }
    rank_a[order_a[i]] = static_cast<long>(i);
    rank_b[order_b[i]] = static_cast<long>(i);
  }
  double sum_sq = 0.0;
  for (size_t f = 0; f < n; ++f) {
    const double diff = static_cast<double>(rank_a[f] - rank_b[f]);
    sum_sq += diff * diff;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * sum_sq / (nn * (nn * nn - 1.0));
}

}  // namespace ifenet
