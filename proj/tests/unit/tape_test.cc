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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.h"

namespace ifenet {
namespace {

using testing::FiniteDifferences;
using testing::RandomMatrix;
using testing::RelativeError;

double MaxRelativeError(const Matrix& analytic, const Matrix& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, RelativeError(analytic.data()[i], numeric.data()[i]));
  }
  return worst;
}

TEST(TapeTest, CrossEntropyOfTwoLogits) {
  Tape tape;
  Matrix logits(1, 2);
  logits << 0.0, 1.0;
  const ValueId z = tape.Parameter(logits);
  const std::vector<int> labels = {0};
  const ValueId loss = tape.CrossEntropyLoss(z, labels);
  EXPECT_NEAR(tape.scalar(loss), std::log(1.0 + std::exp(1.0)), 1e-12);
  EXPECT_NEAR(tape.scalar(loss), 1.3133, 5e-5);

  const GradientMap grads = tape.Backward(loss);
  const double p1 = std::exp(1.0) / (1.0 + std::exp(1.0));
  EXPECT_NEAR(grads.at(z)(0, 0), -p1, 1e-12);
  EXPECT_NEAR(grads.at(z)(0, 1), p1, 1e-12);
}

TEST(TapeTest, CrossEntropyIsMeanOverBatch) {
  Tape tape;
  Matrix logits(2, 3);
  logits << 1.0, 2.0, 3.0, 0.5, 0.5, -1.0;
  const std::vector<int> labels = {2, 0};
  const ValueId loss = tape.CrossEntropyLoss(tape.Constant(logits), labels);
  double expected = 0.0;
  for (int r = 0; r < 2; ++r) {
    double lse = 0.0;
    for (int c = 0; c < 3; ++c) lse += std::exp(logits(r, c));
    expected += std::log(lse) - logits(r, labels[r]);
  }
  EXPECT_NEAR(tape.scalar(loss), expected / 2.0, 1e-12);
}

TEST(TapeTest, CrossEntropyStableForHugeLogits) {
  Tape tape;
  Matrix logits(1, 2);
  logits << 1000.0, 0.0;
  const std::vector<int> labels = {1};
  const ValueId loss = tape.CrossEntropyLoss(tape.Parameter(logits), labels);
  EXPECT_NEAR(tape.scalar(loss), 1000.0, 1e-9);
}

TEST(TapeTest, RowSoftmaxRowsSumToOne) {
  std::mt19937_64 gen(7);
  Tape tape;
  const ValueId s = tape.RowSoftmax(tape.Constant(RandomMatrix(gen, 5, 4, -30.0, 30.0)));
  const Matrix& v = tape.value(s);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    EXPECT_NEAR(v.row(r).sum(), 1.0, 1e-12);
    EXPECT_TRUE((v.row(r).array() >= 0.0).all());
  }
}

TEST(TapeTest, RowSoftmaxShiftInvariant) {
  Tape tape;
  Matrix a(1, 3);
  a << 1.0, 2.0, 3.0;
  const Matrix& s1 = tape.value(tape.RowSoftmax(tape.Constant(a)));
  const Matrix s1_copy = s1;
  const Matrix& s2 = tape.value(tape.RowSoftmax(tape.Constant(a.array() + 500.0)));
  EXPECT_LT((s1_copy - s2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(TapeTest, ReluGradientIsZeroAtZero) {
  Tape tape;
  Matrix a(1, 3);
  a << -1.0, 0.0, 2.0;
  const ValueId p = tape.Parameter(a);
  const ValueId loss = tape.MeanOverRows(tape.MatMul(tape.Relu(p), tape.Constant(Matrix::Ones(3, 1))));
  const GradientMap g = tape.Backward(loss);
  EXPECT_EQ(g.at(p)(0, 0), 0.0);
  EXPECT_EQ(g.at(p)(0, 1), 0.0);
  EXPECT_EQ(g.at(p)(0, 2), 1.0);
}

TEST(TapeTest, ExpCapClampsValueAndGradient) {
  Tape tape;
  Matrix a(1, 2);
  a << 60.0, 1.0;
  const ValueId p = tape.Parameter(a);
  const ValueId e = tape.Exp(p, 50.0);
  EXPECT_EQ(tape.value(e)(0, 0), std::exp(50.0));
  EXPECT_EQ(tape.value(e)(0, 1), std::exp(1.0));
  EXPECT_EQ(tape.exp_clamp_count(), 1u);
  const ValueId loss = tape.MeanOverRows(tape.MatMul(e, tape.Constant(Matrix::Ones(2, 1))));
  const GradientMap g = tape.Backward(loss);
  EXPECT_EQ(g.at(p)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(g.at(p)(0, 1), std::exp(1.0));
}

TEST(TapeTest, MatMulTransposeMatchesExplicitTranspose) {
  std::mt19937_64 gen(3);
  const Matrix a = RandomMatrix(gen, 3, 4);
  const Matrix b = RandomMatrix(gen, 5, 4);
  Tape tape;
  const ValueId ab = tape.MatMul(tape.Constant(a), tape.Constant(b), Transpose::kYes);
  const Matrix expected = a * b.transpose();
  EXPECT_LT((tape.value(ab) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TapeTest, MeanOverRows) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 3.0, 6.0;
  Tape tape;
  const Matrix& m = tape.value(tape.MeanOverRows(tape.Constant(a)));
  ASSERT_EQ(m.rows(), 1);
  EXPECT_DOUBLE_EQ(m(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 4.0);
}

TEST(TapeTest, ElementwiseDispatch) {
  Matrix a(1, 2);
  a << -2.0, 3.0;
  Matrix b(1, 2);
  b << 4.0, 5.0;
  Tape tape;
  const ValueId va = tape.Constant(a);
  const ValueId vb = tape.Constant(b);
  EXPECT_EQ(tape.value(tape.Elementwise(ElementwiseKind::kAdd, va, &vb))(0, 1), 8.0);
  EXPECT_EQ(tape.value(tape.Elementwise(ElementwiseKind::kMul, va, &vb))(0, 0), -8.0);
  EXPECT_EQ(tape.value(tape.Elementwise(ElementwiseKind::kRelu, va))(0, 0), 0.0);
  EXPECT_EQ(tape.value(tape.Elementwise(ElementwiseKind::kScale, va, nullptr, 0.5))(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(tape.value(tape.Elementwise(ElementwiseKind::kExp, va))(0, 1), std::exp(3.0));
  EXPECT_THROW(tape.Elementwise(ElementwiseKind::kAdd, va), InvalidArgument);
}

TEST(TapeTest, ShapeErrorsNameTheOperation) {
  Tape tape;
  const ValueId a = tape.Constant(Matrix::Zero(2, 3));
  const ValueId b = tape.Constant(Matrix::Zero(2, 2));
  EXPECT_THROW(tape.Add(a, b), ShapeError);
  EXPECT_THROW(tape.Mul(a, b), ShapeError);
  EXPECT_THROW(tape.MatMul(a, b), ShapeError);
  try {
    tape.MatMul(a, b);
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("MatMul"), std::string::npos);
  }
}

TEST(TapeTest, BackwardRequiresScalarLoss) {
  Tape tape;
  const ValueId a = tape.Parameter(Matrix::Ones(2, 2));
  EXPECT_THROW(tape.Backward(a), ShapeError);
}

TEST(TapeTest, RejectsNonFiniteInputsAndBadLabels) {
  Tape tape;
  Matrix bad(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(tape.Constant(bad), InvalidArgument);
  EXPECT_THROW(tape.Parameter(bad), InvalidArgument);
  const ValueId logits = tape.Constant(Matrix::Zero(1, 2));
  const std::vector<int> out_of_range = {2};
  EXPECT_THROW(tape.CrossEntropyLoss(logits, out_of_range), InvalidArgument);
  const std::vector<int> too_many = {0, 1};
  EXPECT_THROW(tape.CrossEntropyLoss(logits, too_many), ShapeError);
}

TEST(TapeTest, GradientOfUnusedParameterIsZero) {
  Tape tape;
  const ValueId used = tape.Parameter(Matrix::Ones(1, 1));
  const ValueId unused = tape.Parameter(Matrix::Ones(2, 2));
  const GradientMap g = tape.Backward(tape.Scale(used, 3.0));
  EXPECT_EQ(g.at(used)(0, 0), 3.0);
  ASSERT_TRUE(g.contains(unused));
  EXPECT_EQ(g.at(unused).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TapeTest, SharedSubexpressionAccumulates) {
  Tape tape;
  Matrix v(1, 1);
  v(0, 0) = 3.0;
  const ValueId x = tape.Parameter(v);
  const ValueId loss = tape.Add(tape.Mul(x, x), x);  // x^2 + x
  EXPECT_DOUBLE_EQ(tape.Backward(loss).at(x)(0, 0), 7.0);
}

// Every op composed into one scalar loss, checked against central
// differences computed here rather than by the library helper.
TEST(TapeTest, ComposedGraphMatchesFiniteDifferences) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x = RandomMatrix(gen, 3, 4);
    Matrix w = RandomMatrix(gen, 4, 3);
    Matrix v = RandomMatrix(gen, 5, 3);
    Matrix bias = RandomMatrix(gen, 3, 3);
    const std::vector<int> labels = {0, 2, 1};

    auto build = [&](Tape& t, ValueId* ids) {
      ids[0] = t.Parameter(x);
      ids[1] = t.Parameter(w);
      ids[2] = t.Parameter(v);
      ids[3] = t.Parameter(bias);
      const ValueId h = t.Relu(t.Add(t.MatMul(ids[0], ids[1]), ids[3]));
      const ValueId e = t.Exp(t.Scale(ids[2], 0.7));
      const ValueId s = t.RowSoftmax(t.MatMul(h, e, Transpose::kYes));
      const ValueId m = t.MeanOverRows(t.Mul(s, s));
      const ValueId logits = t.Add(t.MatMul(s, t.Constant(Matrix::Ones(5, 3))),
                                   t.MatMul(t.Constant(Matrix::Ones(3, 1)), t.MatMul(m, ids[2])));
      return t.CrossEntropyLoss(logits, labels);
    };

    Tape tape;
    ValueId ids[4];
    const GradientMap g = tape.Backward(build(tape, ids));
    auto loss = [&] {
      Tape t;
      ValueId unused[4];
      return t.scalar(build(t, unused));
    };
    Matrix* params[4] = {&x, &w, &v, &bias};
    for (int p = 0; p < 4; ++p) {
      const Matrix numeric = FiniteDifferences(loss, *params[p], 1e-5);
      EXPECT_LT(MaxRelativeError(g.at(ids[p]), numeric), 1e-4) << "trial " << trial << " param " << p;
    }
  }
}

TEST(TapeTest, GradCheckHelperAgrees) {
  std::mt19937_64 gen(5);
  const std::vector<Matrix> params = {RandomMatrix(gen, 2, 3), RandomMatrix(gen, 3, 2)};
  const std::vector<int> labels = {1, 0};
  const LossBuilder build = [&](Tape& t, std::span<const ValueId> p) {
    return t.CrossEntropyLoss(t.RowSoftmax(t.MatMul(p[0], p[1])), labels);
  };
  EXPECT_LT(GradCheck(build, params, 1e-5), 1e-7);
  EXPECT_THROW(GradCheck(build, params, 0.0), InvalidArgument);
}

}  // namespace
}  // namespace ifenet
