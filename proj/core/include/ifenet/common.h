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

#ifndef IFENET_COMMON_H_
#define IFENET_COMMON_H_

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ifenet {

// All numerics are 64-bit. Row-major so that one instance is one contiguous
// row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error hierarchy. Every failure surfaced by the library is one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition (non-finite entry, r <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operand shapes are inconsistent.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Tabular input problems: ragged rows, missing columns, empty results.
class DataError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A persisted artifact failed validation (version, checksum, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

std::string ShapeString(Eigen::Index rows, Eigen::Index cols);

inline std::string ShapeString(const Matrix& m) { return ShapeString(m.rows(), m.cols()); }

bool AllFinite(const Matrix& m);

}  // namespace ifenet

#endif  // IFENET_COMMON_H_
