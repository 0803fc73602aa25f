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

#include "ifenet/ife.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "ifenet/random.h"

namespace ifenet {

void IfeParams::Validate() const {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw InvalidArgument("IfeParams: amplification r must be finite and positive");
  }
  const size_t n = units.size();
  if (n < 2) throw InvalidArgument("IfeParams: need at least 2 attention units");
  for (size_t j = 0; j < n; ++j) {
    const Matrix& w = units[j];
    if (w.rows() != static_cast<Eigen::Index>(n) || w.cols() != units.front().cols()) {
      throw ShapeError("IfeParams: unit " + std::to_string(j) + " has shape " + ShapeString(w) +
                       ", expected " + ShapeString(static_cast<Eigen::Index>(n), units.front().cols()));
    }
    if (!w.allFinite()) throw InvalidArgument("IfeParams: non-finite weight in unit " + std::to_string(j));
  }
}

IfeParams IfeParams::Init(size_t d, int num_classes, double r, uint64_t seed) {
  if (d < 2) throw InvalidArgument("IfeParams::Init: d must be >= 2");
  if (num_classes < 2) throw InvalidArgument("IfeParams::Init: need >= 2 classes");
  IfeParams p;
  p.r = r;
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  p.units.reserve(d);
  for (size_t j = 0; j < d; ++j) {
    Matrix w(static_cast<Eigen::Index>(d), num_classes);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = UniformReal(rng, -bound, bound);
    p.units.push_back(std::move(w));
  }
  p.Validate();
  return p;
}

MaskBank BuildMasks(size_t d) {
  if (d < 2) throw InvalidArgument("BuildMasks: d must be >= 2, got " + std::to_string(d));
  const auto n = static_cast<Eigen::Index>(d);
  MaskBank bank{Matrix::Ones(n, n)};
  bank.masks.diagonal().setZero();
  return bank;
}

ValueId MaskInput(Tape& tape, ValueId x, const RowVector& mask) {
  if (mask.size() != x.cols) {
    throw ShapeError("MaskInput: mask length " + std::to_string(mask.size()) + " vs input " +
                     ShapeString(x.rows, x.cols));
  }
  const ValueId m = tape.Constant(mask.replicate(x.rows, 1));
  return tape.Mul(x, m);
}

ValueId AttentionUnit(Tape& tape, ValueId masked, ValueId unit_weights) {
  return tape.RowSoftmax(tape.MatMul(masked, unit_weights));
}

ValueId AmplifiedScores(Tape& tape, ValueId unit_weights, double r, ValueId z) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw InvalidArgument("AmplifiedScores: r must be finite and positive");
  }
  const ValueId amplified = tape.Exp(tape.Scale(unit_weights, r), kExpArgumentCap);
  return tape.MatMul(z, amplified, Transpose::kYes);
}

Aggregate AggregateScores(Tape& tape, std::span<const ValueId> amplified) {
  if (amplified.empty()) throw ShapeError("AggregateScores: no attention scores");
  const ValueId first = amplified.front();
  if (static_cast<size_t>(first.cols) != amplified.size()) {
    throw ShapeError("AggregateScores: " + std::to_string(amplified.size()) +
                     " score rows of length " + std::to_string(first.cols));
  }
  ValueId sum = first;
  for (size_t j = 1; j < amplified.size(); ++j) sum = tape.Add(sum, amplified[j]);
  const ValueId mean = tape.Scale(sum, 1.0 / static_cast<double>(amplified.size()));
  return {mean, tape.RowSoftmax(mean)};
}

Matrix IfeActivations::Stacked(const Tape& tape, Eigen::Index instance) const {
  const auto d = static_cast<Eigen::Index>(amplified.size());
  Matrix a(d, d);
  for (Eigen::Index j = 0; j < d; ++j) a.row(j) = tape.value(amplified[j]).row(instance);
  return a;
}

IfeActivations IfeForward(Tape& tape, ValueId x, std::span<const ValueId> units, double r) {
  const size_t d = static_cast<size_t>(x.cols);
  if (units.size() != d) {
    throw ShapeError("IfeForward: " + std::to_string(units.size()) + " attention units for " +
                     std::to_string(d) + " features");
  }
  const MaskBank masks = BuildMasks(d);
  const size_t clamps_before = tape.exp_clamp_count();

  IfeActivations acts;
  for (size_t j = 0; j < d; ++j) {
    if (units[j].rows != x.cols) {
      throw ShapeError("IfeForward: unit " + std::to_string(j) + " has shape " +
                       ShapeString(units[j].rows, units[j].cols) + " for input " +
                       ShapeString(x.rows, x.cols));
    }
    const ValueId masked = MaskInput(tape, x, masks.mask(j));
    const ValueId z = AttentionUnit(tape, masked, units[j]);
    acts.masked.push_back(masked);
    acts.class_probs.push_back(z);
    acts.amplified.push_back(AmplifiedScores(tape, units[j], r, z));
  }
  const Aggregate agg = AggregateScores(tape, acts.amplified);
  acts.mean = agg.mean;
  acts.scores = agg.scores;
  acts.exp_clamps = tape.exp_clamp_count() - clamps_before;
  return acts;
}

Matrix IfeScores(const Matrix& x, const IfeParams& params) {
  params.Validate();
  Tape tape;
  const ValueId xv = tape.Constant(x);
  std::vector<ValueId> units;
  units.reserve(params.units.size());
  for (const Matrix& w : params.units) units.push_back(tape.Constant(w));
  return tape.value(IfeForward(tape, xv, units, params.r).scores);
}

std::vector<FeatureScore> GlobalRanking(const Matrix& scores) {
  if (scores.rows() < 1) throw InvalidArgument("GlobalRanking: no instances");
  const RowVector mean = scores.colwise().mean();
  std::vector<FeatureScore> ranking;
  ranking.reserve(static_cast<size_t>(mean.size()));
  for (Eigen::Index j = 0; j < mean.size(); ++j) ranking.push_back({static_cast<size_t>(j), mean(j)});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const FeatureScore& a, const FeatureScore& b) { return a.score > b.score; });
  return ranking;
}

}  // namespace ifenet
