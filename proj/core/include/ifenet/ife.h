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

#ifndef IFENET_IFE_H_
#define IFENET_IFE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ifenet/common.h"
#include "ifenet/tape.h"

namespace ifenet {

inline constexpr double kDefaultAmplification = 3.0;
// r * w is clamped to this value before exponentiation; exp(50) ~ 5e21.
inline constexpr double kExpArgumentCap = 50.0;

// Weights of the d attention units (each d x C) and the amplification
// coefficient r, which is a fixed hyperparameter.
struct IfeParams {
  std::vector<Matrix> units;
  double r = kDefaultAmplification;

  size_t d() const { return units.size(); }
  Eigen::Index num_classes() const { return units.empty() ? 0 : units.front().cols(); }

  // Throws InvalidArgument / ShapeError on a broken invariant.
  void Validate() const;

  // Entries i.i.d. uniform on [-1/sqrt(d), 1/sqrt(d)].
  static IfeParams Init(size_t d, int num_classes, double r, uint64_t seed);
};

// Row j of `masks` is m_j: all ones except a zero at column j.
struct MaskBank {
  Matrix masks;

  size_t size() const { return static_cast<size_t>(masks.rows()); }
  RowVector mask(size_t j) const { return masks.row(static_cast<Eigen::Index>(j)); }
};

MaskBank BuildMasks(size_t d);

// X~ = X with every row multiplied elementwise by `mask`. The mask enters the
// tape as a constant.
ValueId MaskInput(Tape& tape, ValueId x, const RowVector& mask);

// z_j = softmax over classes of X~ w_j. No bias.
ValueId AttentionUnit(Tape& tape, ValueId masked, ValueId unit_weights);

// a_j[b, i] = sum_c exp(r w_j[i, c]) z_j[b, c], i.e. z_j exp(r w_j)^T.
ValueId AmplifiedScores(Tape& tape, ValueId unit_weights, double r, ValueId z);

struct Aggregate {
  ValueId mean;    // B x d: per instance, mean of the stacked rows a_1..a_d
  ValueId scores;  // B x d: S = row softmax of `mean`
};

// Stacks a_1..a_d per instance and reduces over the iteration axis.
Aggregate AggregateScores(Tape& tape, std::span<const ValueId> amplified);

// Handles to every intermediate of one IFE pass.
struct IfeActivations {
  std::vector<ValueId> masked;     // X~_j, B x d
  std::vector<ValueId> class_probs;  // z_j, B x C
  std::vector<ValueId> amplified;  // a_j, B x d
  ValueId mean;
  ValueId scores;
  size_t exp_clamps = 0;

  // d x d matrix A for one instance: row j is a_j of that instance.
  Matrix Stacked(const Tape& tape, Eigen::Index instance) const;
};

IfeActivations IfeForward(Tape& tape, ValueId x, std::span<const ValueId> units, double r);

// Convenience: importance scores of every row of `x`, without gradients.
Matrix IfeScores(const Matrix& x, const IfeParams& params);

struct FeatureScore {
  size_t feature = 0;
  double score = 0.0;
};

// Column means of S, sorted by descending score; ties by ascending index.
std::vector<FeatureScore> GlobalRanking(const Matrix& scores);

}  // namespace ifenet

#endif  // IFENET_IFE_H_
