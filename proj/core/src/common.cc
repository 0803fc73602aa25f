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

#include "ifenet/common.h"

#include <sstream>

namespace ifenet {

std::string ShapeString(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << "(" << rows << "x" << cols << ")";
  return os.str();
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }

}  // namespace ifenet
