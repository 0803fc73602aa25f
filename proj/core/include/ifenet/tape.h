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

#ifndef IFENET_TAPE_H_
#define IFENET_TAPE_H_

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ifenet/common.h"

namespace ifenet {

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
struct ValueId {
  size_t id = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  friend bool operator==(const ValueId&, const ValueId&) = default;
};

enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,
  kAdd,
  kMul,
  kExp,
  kRelu,
  kScale,
  kRowSoftmax,
  kMeanOverRows,
  kCrossEntropy,
};

enum class ElementwiseKind { kAdd, kMul, kExp, kRelu, kScale };

// Whether MatMul uses the right operand as stored or transposed.
enum class Transpose { kNo, kYes };

// Adjoints of every parameter node on a tape, in registration order.
class GradientMap {
 public:
  GradientMap() = default;

  // Adjoint for `param`. Throws InvalidArgument if it is not a tracked
  // parameter of the originating tape.
  const Matrix& at(ValueId param) const;
  bool contains(ValueId param) const;

  size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Largest |adjoint| entry over all parameters; 0 when empty.
  double MaxAbs() const;

 private:
  friend class Tape;
  std::vector<std::pair<ValueId, Matrix>> entries_;
};

// Append-only reverse-mode recorder. Each method validates its operands,
// evaluates the forward value eagerly and records enough to run the
// corresponding vector-Jacobian product in Backward().
//
// Single-writer: a tape must not be shared across threads while recording.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  ValueId Constant(Matrix data);
  ValueId Parameter(Matrix data);

  ValueId MatMul(ValueId a, ValueId b, Transpose transpose_b = Transpose::kNo);

  ValueId Add(ValueId a, ValueId b);
  ValueId Mul(ValueId a, ValueId b);
  // exp(min(a, cap)). Entries above `cap` are clamped and receive no
  // gradient; the number of clamped entries is tallied in exp_clamp_count().
  ValueId Exp(ValueId a, double cap = std::numeric_limits<double>::infinity());
  // Gradient at exactly zero is 0.
  ValueId Relu(ValueId a);
  ValueId Scale(ValueId a, double c);

  // Generic dispatcher over the pointwise kinds; `b` is required for the
  // binary kinds and ignored otherwise, `c` is used by kScale.
  ValueId Elementwise(ElementwiseKind kind, ValueId a, const ValueId* b = nullptr,
                      double c = 1.0);

  // Softmax of every row with max-shift stabilization.
  ValueId RowSoftmax(ValueId a);

  // 1 x cols: column means.
  ValueId MeanOverRows(ValueId a);

  // Mean over rows of -log softmax(logits)[label]. Scalar (1x1).
  ValueId CrossEntropyLoss(ValueId logits, std::span<const int> labels);

  // Reverse sweep seeded with d loss / d loss = 1. `loss` must be 1x1.
  GradientMap Backward(ValueId loss) const;

  const Matrix& value(ValueId v) const;
  double scalar(ValueId v) const;
  size_t size() const { return nodes_.size(); }
  size_t exp_clamp_count() const { return exp_clamp_count_; }

 private:
  struct Node {
    OpKind op;
    size_t lhs = 0;
    size_t rhs = 0;
    double scalar = 0.0;
    Transpose transpose = Transpose::kNo;
    Matrix value{};
    // CrossEntropy keeps the row-softmax of its logits; Exp/Relu keep the
    // mask of entries that pass gradient.
    Matrix aux{};
    std::vector<int> labels{};
  };

  const Node& node(ValueId v) const;
  ValueId Record(Node n);
  void CheckBinaryShapes(const char* op, ValueId a, ValueId b) const;

  std::vector<Node> nodes_;
  size_t exp_clamp_count_ = 0;
};

// Builds a scalar loss on a fresh tape from parameter handles registered in
// the same order as the `params` passed to GradCheck.
using LossBuilder = std::function<ValueId(Tape&, std::span<const ValueId>)>;

// Compares tape adjoints against central differences
//   (L(p + eps) - L(p - eps)) / (2 eps)
// entry by entry and returns max |tape - fd| / max(1e-8, |tape| + |fd|).
double GradCheck(const LossBuilder& build, const std::vector<Matrix>& params, double eps);

}  // namespace ifenet

#endif  // IFENET_TAPE_H_
