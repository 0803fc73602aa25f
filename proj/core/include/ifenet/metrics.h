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

#ifndef IFENET_METRICS_H_
#define IFENET_METRICS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ifenet/data.h"
#include "ifenet/model.h"

namespace ifenet {

// counts(c, k) = number of instances with true class c predicted as k.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  long at(int truth, int predicted) const;
  void Add(int truth, int predicted, long count = 1);
  long total() const { return total_; }
  long trace() const;

  // One-vs-rest counts for class c.
  long TruePositives(int c) const;
  long FalsePositives(int c) const;
  long FalseNegatives(int c) const;
  long TrueNegatives(int c) const;

 private:
  int num_classes_;
  std::vector<long> counts_;
  long total_ = 0;
};

ConfusionMatrix Confusion(std::span<const int> predictions, std::span<const int> labels,
                          int num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;

  // Fixed field names: accuracy, precision_macro, recall_macro, f1_macro,
  // per_class.
  std::string ToJson(int indent = 2) const;
};

// Per class (one-vs-rest) P = TP/(TP+FP), R = TP/(TP+FN),
// F = 2PR/(P+R), each with 0/0 := 0; macro values are unweighted means over
// all classes; accuracy = trace / total.
MetricsReport ClassificationMetrics(const ConfusionMatrix& cm);

MetricsReport Evaluate(const IfeNetParams& params, const EncodedDataset& dataset);
double Accuracy(const IfeNetParams& params, const EncodedDataset& dataset);

// DCG@K = sum_{i=1..K} grade(order[i-1]) / log2(i + 1); NDCG = DCG / IDCG.
// `grades` is indexed by feature. Throws when all grades are zero.
double NdcgAtK(std::span<const size_t> predicted_order, std::span<const double> grades, size_t k);

// Group g of G tie groups receives grade G - 1 - g.
std::vector<double> GradesFromRanking(const TieGroupedOrder& truth, size_t d);

struct PermutationImportance {
  double baseline_accuracy = 0.0;
  std::vector<double> importance;  // per feature
  std::vector<size_t> order;       // descending importance, ties by index
};

// importance(j) = baseline - mean over repeats of accuracy with column j
// shuffled. Shuffle streams derive from (seed, j, repeat).
PermutationImportance ComputePermutationImportance(const IfeNetParams& params,
                                                   const EncodedDataset& dataset, size_t repeats,
                                                   uint64_t seed);

// Spearman rho between two tie-free orders of the same feature set.
double RankCorrelation(std::span<const size_t> order_a, std::span<const size_t> order_b);

}  // namespace ifenet

#endif  // IFENET_METRICS_H_
