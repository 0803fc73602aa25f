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

#ifndef IFENET_TRAIN_H_
#define IFENET_TRAIN_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifenet/data.h"
#include "ifenet/model.h"
#include "ifenet/random.h"

namespace ifenet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step = 0;

  // Zero moments shaped like `params`.
  static AdamState For(std::span<const Matrix* const> params);
};

// Bias-corrected Adam update of every tensor in place.
void AdamStep(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
              double learning_rate, const AdamConfig& config = {});

struct TrainConfig {
  double learning_rate = 0.01;
  size_t batch_size = 64;
  size_t max_epochs = 120;
  size_t patience = 10;
  uint64_t seed = 0;
  double r = kDefaultAmplification;
  std::optional<size_t> hidden_size;  // defaults to d
  ModelKind kind = ModelKind::kIfeNet;
  AdamConfig adam;

  void Validate() const;
  // Single-line JSON with every field materialized.
  std::string ToJson() const;
};

enum class StopReason { kMaxEpochs, kEarlyStop };

const char* StopReasonName(StopReason reason);

struct EpochRecord {
  size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  size_t best_epoch = 0;  // 1-based
  StopReason stop_reason = StopReason::kMaxEpochs;
  size_t exp_clamps = 0;

  double best_validation_accuracy() const;
  // epoch,train_loss,validation_accuracy
  std::string ToCsv() const;
};

struct TrainResult {
  IfeNetParams params;  // snapshot of the best validation epoch
  TrainHistory history;
};

// Trains `initial` in place of a copy. Each epoch visits a seeded
// permutation of the training rows in minibatches (a trailing batch of one
// row is dropped); validation accuracy is measured after every epoch and the
// best (strictly greater) epoch is restored at the end.
TrainResult Train(const IfeNetParams& initial, const EncodedDataset& train_set,
                  const EncodedDataset& validation_set, const TrainConfig& config);

// Initializes from config (d, C from the data) and trains.
TrainResult TrainFromScratch(const EncodedDataset& train_set, const EncodedDataset& validation_set,
                             const TrainConfig& config);

// Mean cross-entropy of the training-mode forward on one batch.
double BatchLoss(const IfeNetParams& params, const Matrix& x, std::span<const int> y);

struct Domain {
  enum class Kind { kChoice, kUniformReal, kUniformInt, kLogUniform };
  std::string name;
  Kind kind = Kind::kChoice;
  std::vector<double> choices;
  double lower = 0.0;
  double upper = 0.0;
};

struct SearchSpace {
  std::vector<Domain> domains;

  void Validate() const;
  std::map<std::string, double> Sample(Rng& rng) const;

  // learning_rate {0.01, 0.001, 0.0001}, batch_size {32, 64, 128},
  // hidden_size uniform [16, 128], r uniform [1, 5].
  static SearchSpace IfeNet();
  // Recorded for reference only; no gradient-boosting learner is shipped.
  static SearchSpace XGBoostReference();
};

// Copies `base` and overrides learning_rate, batch_size, hidden_size and r
// where present in `values`.
TrainConfig ApplySample(const TrainConfig& base, const std::map<std::string, double>& values);

struct TrialRecord {
  size_t index = 0;
  std::map<std::string, double> sampled;
  TrainConfig config;
  double validation_accuracy = 0.0;
  size_t best_epoch = 0;
  size_t epochs_run = 0;
};

struct SearchResult {
  size_t best_index = 0;
  TrainConfig best_config;
  std::vector<TrialRecord> trials;

  // trial,<hyperparameters...>,validation_accuracy,best_epoch,epochs_run
  std::string ToCsv() const;
};

// Trials are independent: trial t samples from (seed, t) and trains with a
// seed derived from (seed, t). Up to `threads` trials run concurrently.
// Best = highest validation accuracy, ties to the earlier trial.
SearchResult RandomSearch(const SearchSpace& space, size_t trials, const TrainConfig& base,
                          const EncodedDataset& train_set, const EncodedDataset& validation_set,
                          uint64_t seed, size_t threads = 1);

struct SweepRow {
  double r = 0.0;
  double test_accuracy = 0.0;
  double validation_accuracy = 0.0;
  size_t best_epoch = 0;
};

// One model per r with everything else fixed (including the seed).
std::vector<SweepRow> SweepAmplification(std::span<const double> r_values, const TrainConfig& base,
                                         const EncodedDataset& train_set,
                                         const EncodedDataset& validation_set,
                                         const EncodedDataset& test_set, size_t threads = 1);

// r,test_accuracy
std::string SweepToCsv(std::span<const SweepRow> rows);

// IFE_THREADS if set and positive, else hardware concurrency (at least 1).
size_t DefaultThreadCount();

}  // namespace ifenet

#endif  // IFENET_TRAIN_H_
