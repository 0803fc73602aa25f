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

#include "ifenet/tape.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace ifenet {
namespace {

// Forward products accumulate each output entry in a fixed order that does
// not depend on the row's position in the batch or on memory alignment, so
// a row evaluated alone matches the same row evaluated inside any batch.
Matrix RowwiseProduct(const Matrix& a, const Matrix& b, Transpose transpose_b) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index inner = a.cols();
  if (transpose_b == Transpose::kYes) {
    const Eigen::Index cols = b.rows();
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double* ai = a.data() + i * inner;
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double* bj = b.data() + j * inner;
        double acc = 0.0;
        for (Eigen::Index k = 0; k < inner; ++k) acc += ai[k] * bj[k];
        out(i, j) = acc;
      }
    }
    return out;
  }
  const Eigen::Index cols = b.cols();
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double* ai = a.data() + i * inner;
    double* oi = out.data() + i * cols;
    for (Eigen::Index k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = b.data() + k * cols;
      for (Eigen::Index j = 0; j < cols; ++j) oi[j] += aik * bk[j];
    }
  }
  return out;
}

std::string Describe(const char* op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << ShapeString(a) << " and " << ShapeString(b);
  return os.str();
}

void AccumulateInto(Matrix& slot, const Matrix& contribution) {
  if (slot.size() == 0) {
    slot = contribution;
  } else {
    slot += contribution;
  }
}

}  // namespace

const Matrix& GradientMap::at(ValueId param) const {
  for (const auto& [id, grad] : entries_) {
    if (id.id == param.id) return grad;
  }
  throw InvalidArgument("GradientMap: node " + std::to_string(param.id) +
                        " is not a tracked parameter");
}

bool GradientMap::contains(ValueId param) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first.id == param.id; });
}

double GradientMap::MaxAbs() const {
  double m = 0.0;
  for (const auto& [id, grad] : entries_) {
    if (grad.size() > 0) m = std::max(m, grad.cwiseAbs().maxCoeff());
  }
  return m;
}

const Tape::Node& Tape::node(ValueId v) const {
  if (v.id >= nodes_.size()) {
    throw InvalidArgument("Tape: value id " + std::to_string(v.id) + " out of range (tape has " +
                          std::to_string(nodes_.size()) + " nodes)");
  }
  return nodes_[v.id];
}

ValueId Tape::Record(Node n) {
  ValueId id{nodes_.size(), n.value.rows(), n.value.cols()};
  nodes_.push_back(std::move(n));
  return id;
}

const Matrix& Tape::value(ValueId v) const { return node(v).value; }

double Tape::scalar(ValueId v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) {
    throw ShapeError("Tape::scalar: value has shape " + ShapeString(m));
  }
  return m(0, 0);
}

void Tape::CheckBinaryShapes(const char* op, ValueId a, ValueId b) const {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) throw ShapeError(Describe(op, va, vb));
}

ValueId Tape::Constant(Matrix data) {
  if (!data.allFinite()) throw InvalidArgument("Tape::Constant: non-finite entry");
  Node n{.op = OpKind::kConstant};
  n.value = std::move(data);
  return Record(std::move(n));
}

ValueId Tape::Parameter(Matrix data) {
  if (!data.allFinite()) throw InvalidArgument("Tape::Parameter: non-finite entry");
  Node n{.op = OpKind::kParameter};
  n.value = std::move(data);
  return Record(std::move(n));
}

ValueId Tape::MatMul(ValueId a, ValueId b, Transpose transpose_b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  const Eigen::Index inner_b = transpose_b == Transpose::kYes ? vb.cols() : vb.rows();
  if (va.cols() != inner_b) {
    throw ShapeError(Describe(transpose_b == Transpose::kYes ? "MatMul(a, b^T)" : "MatMul", va, vb));
  }
  Node n{.op = OpKind::kMatMul, .lhs = a.id, .rhs = b.id, .transpose = transpose_b};
  n.value = RowwiseProduct(va, vb, transpose_b);
  return Record(std::move(n));
}

ValueId Tape::Add(ValueId a, ValueId b) {
  CheckBinaryShapes("Add", a, b);
  Node n{.op = OpKind::kAdd, .lhs = a.id, .rhs = b.id};
  n.value = node(a).value + node(b).value;
  return Record(std::move(n));
}

ValueId Tape::Mul(ValueId a, ValueId b) {
  CheckBinaryShapes("Mul", a, b);
  Node n{.op = OpKind::kMul, .lhs = a.id, .rhs = b.id};
  n.value = node(a).value.cwiseProduct(node(b).value);
  return Record(std::move(n));
}

ValueId Tape::Exp(ValueId a, double cap) {
  if (std::isnan(cap)) throw InvalidArgument("Tape::Exp: cap is NaN");
  const Matrix& va = node(a).value;
  Node n{.op = OpKind::kExp, .lhs = a.id, .scalar = cap};
  n.aux.resize(va.rows(), va.cols());
  n.value.resize(va.rows(), va.cols());
  for (Eigen::Index i = 0; i < va.size(); ++i) {
    const double x = va.data()[i];
    const bool clamped = x > cap;
    if (clamped) ++exp_clamp_count_;
    n.aux.data()[i] = clamped ? 0.0 : 1.0;
    n.value.data()[i] = std::exp(clamped ? cap : x);
  }
  return Record(std::move(n));
}

ValueId Tape::Relu(ValueId a) {
  const Matrix& va = node(a).value;
  Node n{.op = OpKind::kRelu, .lhs = a.id};
  n.aux = (va.array() > 0.0).cast<double>().matrix();
  n.value = va.cwiseMax(0.0);
  return Record(std::move(n));
}

ValueId Tape::Scale(ValueId a, double c) {
  if (!std::isfinite(c)) throw InvalidArgument("Tape::Scale: non-finite scalar");
  Node n{.op = OpKind::kScale, .lhs = a.id, .scalar = c};
  n.value = c * node(a).value;
  return Record(std::move(n));
}

ValueId Tape::Elementwise(ElementwiseKind kind, ValueId a, const ValueId* b, double c) {
  auto need_b = [&]() -> ValueId {
    if (b == nullptr) throw InvalidArgument("Tape::Elementwise: binary kind requires operand b");
    return *b;
  };
  switch (kind) {
    case ElementwiseKind::kAdd:
      return Add(a, need_b());
    case ElementwiseKind::kMul:
      return Mul(a, need_b());
    case ElementwiseKind::kExp:
      return Exp(a);
    case ElementwiseKind::kRelu:
      return Relu(a);
    case ElementwiseKind::kScale:
      return Scale(a, c);
  }
  throw InvalidArgument("Tape::Elementwise: unknown kind");
}

ValueId Tape::RowSoftmax(ValueId a) {
  const Matrix& va = node(a).value;
  if (va.cols() < 1) throw ShapeError("RowSoftmax: input has no columns " + ShapeString(va));
  Node n{.op = OpKind::kRowSoftmax, .lhs = a.id};
  n.value.resize(va.rows(), va.cols());
  const Eigen::Index cols = va.cols();
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    const double* in = va.data() + r * cols;
    double* out = n.value.data() + r * cols;
    double shift = in[0];
    for (Eigen::Index c = 1; c < cols; ++c) shift = std::max(shift, in[c]);
    double total = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - shift);
      total += out[c];
    }
    for (Eigen::Index c = 0; c < cols; ++c) out[c] /= total;
  }
  return Record(std::move(n));
}

ValueId Tape::MeanOverRows(ValueId a) {
  const Matrix& va = node(a).value;
  if (va.rows() < 1 || va.cols() < 1) {
    throw ShapeError("MeanOverRows: empty input " + ShapeString(va));
  }
  Node n{.op = OpKind::kMeanOverRows, .lhs = a.id};
  n.value = va.colwise().mean();
  return Record(std::move(n));
}

ValueId Tape::CrossEntropyLoss(ValueId logits, std::span<const int> labels) {
  const Matrix& vl = node(logits).value;
  if (vl.rows() != static_cast<Eigen::Index>(labels.size()) || vl.rows() == 0) {
    throw ShapeError("CrossEntropyLoss: logits " + ShapeString(vl) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  Node n{.op = OpKind::kCrossEntropy, .lhs = logits.id};
  n.labels.assign(labels.begin(), labels.end());
  n.aux.resize(vl.rows(), vl.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < vl.rows(); ++r) {
    const int label = labels[r];
    if (label < 0 || label >= vl.cols()) {
      throw InvalidArgument("CrossEntropyLoss: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(vl.cols()) + ")");
    }
    const double shift = vl.row(r).maxCoeff();
    const auto shifted = (vl.row(r).array() - shift).eval();
    const double sum_exp = shifted.exp().sum();
    const double log_sum_exp = std::log(sum_exp);
    total += log_sum_exp - shifted(label);
    n.aux.row(r) = (shifted.exp() / sum_exp).matrix();
  }
  n.value = Matrix::Constant(1, 1, total / static_cast<double>(vl.rows()));
  return Record(std::move(n));
}

GradientMap Tape::Backward(ValueId loss) const {
  const Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("Backward: loss must be scalar, got " + ShapeString(root.value));
  }
  std::vector<Matrix> adjoint(loss.id + 1);
  adjoint[loss.id] = Matrix::Ones(1, 1);

  for (size_t k = loss.id + 1; k-- > 0;) {
    const Node& n = nodes_[k];
    const Matrix& g = adjoint[k];
    if (g.size() == 0) continue;
    switch (n.op) {
      case OpKind::kConstant:
      case OpKind::kParameter:
        break;
      case OpKind::kMatMul: {
        const Matrix& a = nodes_[n.lhs].value;
        const Matrix& b = nodes_[n.rhs].value;
        if (n.transpose == Transpose::kYes) {
          AccumulateInto(adjoint[n.lhs], g * b);
          AccumulateInto(adjoint[n.rhs], g.transpose() * a);
        } else {
          AccumulateInto(adjoint[n.lhs], g * b.transpose());
          AccumulateInto(adjoint[n.rhs], a.transpose() * g);
        }
        break;
      }
      case OpKind::kAdd:
        AccumulateInto(adjoint[n.lhs], g);
        AccumulateInto(adjoint[n.rhs], g);
        break;
      case OpKind::kMul:
        AccumulateInto(adjoint[n.lhs], g.cwiseProduct(nodes_[n.rhs].value));
        AccumulateInto(adjoint[n.rhs], g.cwiseProduct(nodes_[n.lhs].value));
        break;
      case OpKind::kExp:
        AccumulateInto(adjoint[n.lhs], g.cwiseProduct(n.value).cwiseProduct(n.aux));
        break;
      case OpKind::kRelu:
        AccumulateInto(adjoint[n.lhs], g.cwiseProduct(n.aux));
        break;
      case OpKind::kScale:
        AccumulateInto(adjoint[n.lhs], n.scalar * g);
        break;
      case OpKind::kRowSoftmax: {
        Matrix d(n.value.rows(), n.value.cols());
        for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
          const double dot = g.row(r).dot(n.value.row(r));
          d.row(r) = n.value.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        AccumulateInto(adjoint[n.lhs], d);
        break;
      }
      case OpKind::kMeanOverRows: {
        const Eigen::Index rows = nodes_[n.lhs].value.rows();
        AccumulateInto(adjoint[n.lhs],
                       g.replicate(rows, 1) / static_cast<double>(rows));
        break;
      }
      case OpKind::kCrossEntropy: {
        Matrix d = n.aux;
        for (size_t r = 0; r < n.labels.size(); ++r) d(r, n.labels[r]) -= 1.0;
        d *= g(0, 0) / static_cast<double>(n.labels.size());
        AccumulateInto(adjoint[n.lhs], d);
        break;
      }
    }
  }

  GradientMap out;
  for (size_t k = 0; k < nodes_.size(); ++k) {
    const Node& n = nodes_[k];
    if (n.op != OpKind::kParameter) continue;
    ValueId id{k, n.value.rows(), n.value.cols()};
    if (k < adjoint.size() && adjoint[k].size() > 0) {
      out.entries_.emplace_back(id, std::move(adjoint[k]));
    } else {
      out.entries_.emplace_back(id, Matrix::Zero(n.value.rows(), n.value.cols()));
    }
  }
  return out;
}

double GradCheck(const LossBuilder& build, const std::vector<Matrix>& params, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("GradCheck: eps must be positive");

  auto evaluate = [&](const std::vector<Matrix>& values, GradientMap* grads,
                      std::vector<ValueId>* ids_out) {
    Tape tape;
    std::vector<ValueId> ids;
    ids.reserve(values.size());
    for (const Matrix& p : values) ids.push_back(tape.Parameter(p));
    const ValueId loss = build(tape, ids);
    if (grads != nullptr) *grads = tape.Backward(loss);
    if (ids_out != nullptr) *ids_out = ids;
    return tape.scalar(loss);
  };

  GradientMap grads;
  std::vector<ValueId> ids;
  evaluate(params, &grads, &ids);

  double worst = 0.0;
  std::vector<Matrix> probe = params;
  for (size_t p = 0; p < params.size(); ++p) {
    const Matrix& analytic = grads.at(ids[p]);
    for (Eigen::Index i = 0; i < params[p].size(); ++i) {
      const double original = params[p].data()[i];
      probe[p].data()[i] = original + eps;
      const double up = evaluate(probe, nullptr, nullptr);
      probe[p].data()[i] = original - eps;
      const double down = evaluate(probe, nullptr, nullptr);
      probe[p].data()[i] = original;
      const double fd = (up - down) / (2.0 * eps);
      const double tape_value = analytic.data()[i];
      const double rel =
          std::abs(tape_value - fd) / std::max(1e-8, std::abs(tape_value) + std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace ifenet
