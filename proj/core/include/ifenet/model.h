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

#ifndef IFENET_MODEL_H_
#define IFENET_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ifenet/common.h"
#include "ifenet/ife.h"
#include "ifenet/tape.h"

namespace ifenet {

// kIfeNet: batch norm -> IFE -> S * X_norm -> FNN.
// kFnn: the same pipeline with the IFE weighting removed (ablation).
enum class ModelKind { kIfeNet, kFnn };

const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

enum class Mode { kTrain, kEval };

struct BatchNormState {
  Matrix gamma;  // 1 x d, trained
  Matrix beta;   // 1 x d, trained
  Matrix running_mean;  // 1 x d
  Matrix running_var;   // 1 x d, biased batch variances
  double momentum = 0.1;
  double epsilon = 1e-5;
};

// Per-feature statistics of one training batch.
struct BatchMoments {
  RowVector mean;
  RowVector var;  // 1/B normalization
};

struct FnnParams {
  Matrix w1;  // d x h
  Matrix b1;  // 1 x h
  Matrix w2;  // h x C
  Matrix b2;  // 1 x C
};

struct IfeNetParams {
  static constexpr int kVersion = 1;

  ModelKind kind = ModelKind::kIfeNet;
  BatchNormState bn;
  IfeParams ife;  // units empty for kFnn
  FnnParams fnn;
  size_t d = 0;
  int num_classes = 0;
  size_t hidden = 0;
  uint64_t seed = 0;
  std::string encoder_ref;  // path of the EncoderSpec the model was trained on

  double r() const { return ife.r; }

  // Trainable tensors in a fixed order: gamma, beta, unit 0..d-1 (IFENet
  // only), w1, b1, w2, b2.
  std::vector<Matrix*> Trainable();
  std::vector<const Matrix*> Trainable() const;
  std::vector<std::string> TrainableNames() const;
  size_t ParameterCount() const;

  void Validate() const;

  friend bool operator==(const IfeNetParams& a, const IfeNetParams& b);
};

// bn gamma = 1, beta = 0, running (0, 1); IFE units per IfeParams::Init;
// FNN weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0.
// `hidden` defaults to d.
IfeNetParams InitParams(size_t d, int num_classes, std::optional<size_t> hidden, double r,
                        uint64_t seed, ModelKind kind = ModelKind::kIfeNet);

// Tape handles for the trainable tensors, in Trainable() order.
struct ParamHandles {
  ValueId gamma;
  ValueId beta;
  std::vector<ValueId> units;
  ValueId w1;
  ValueId b1;
  ValueId w2;
  ValueId b2;

  std::vector<ValueId> All() const;
};

ParamHandles RegisterParameters(Tape& tape, const IfeNetParams& params);
// Re-labels handles registered elsewhere (e.g. by GradCheck).
ParamHandles HandlesFromIds(std::span<const ValueId> ids, const IfeNetParams& params);

// Batch statistics are computed from the data outside the tape; the affine
// part is recorded so gradients reach gamma and beta. `moments` receives the
// batch statistics in train mode.
ValueId BatchNormForward(Tape& tape, const Matrix& x, const BatchNormState& state, ValueId gamma,
                         ValueId beta, Mode mode, BatchMoments* moments = nullptr);

// running <- (1 - momentum) running + momentum batch.
void UpdateRunningStats(BatchNormState& state, const BatchMoments& moments);

struct ForwardOptions {
  // Diagnostic: replace S with all ones.
  bool force_unit_scores = false;
};

struct ForwardResult {
  ValueId logits;
  ValueId normalized;
  std::optional<IfeActivations> ife;  // set for kIfeNet unless forced
  std::optional<BatchMoments> moments;  // train mode only
};

ForwardResult ForwardOnTape(Tape& tape, const Matrix& x, const IfeNetParams& params,
                            const ParamHandles& handles, Mode mode,
                            const ForwardOptions& options = {});

// Registers parameters then runs ForwardOnTape. Dispatches on params.kind.
ForwardResult IfeNetForward(Tape& tape, const Matrix& x, const IfeNetParams& params, Mode mode,
                            const ForwardOptions& options = {});

// Plain FNN path over the same parameters (IFE units, if any, are ignored).
ForwardResult FnnForward(Tape& tape, const Matrix& x, const IfeNetParams& params, Mode mode);

// Eval-mode logits, no gradients.
Matrix EvalLogits(const IfeNetParams& params, const Matrix& x);

// Eval-mode per-instance importance scores S. kIfeNet only.
Matrix ImportanceScores(const IfeNetParams& params, const Matrix& x);

struct Prediction {
  std::vector<int> classes;
  Matrix probabilities;
};

// Softmax of eval logits; argmax with ties to the lowest index.
Prediction Predict(const IfeNetParams& params, const Matrix& x);
Prediction PredictFromLogits(const Matrix& logits);

// Versioned text checkpoint; reals as 17-significant-digit decimals, last
// line is an FNV-1a checksum of everything before it.
std::string SerializeCheckpoint(const IfeNetParams& params);
IfeNetParams ParseCheckpoint(std::string_view text);
void SaveCheckpoint(const IfeNetParams& params, const std::filesystem::path& path);
IfeNetParams LoadCheckpoint(const std::filesystem::path& path);

}  // namespace ifenet

#endif  // IFENET_MODEL_H_
