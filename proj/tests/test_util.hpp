// SPDX-FileCopyrightText: Copyright (c) 2026 The pgen Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <vector>

#include "pgen/diffcore.hpp"
#include "pgen/molgraph.hpp"
#include "pgen/random.hpp"
#include "pgen/synthetic.hpp"

namespace pgen::testing {

inline Array<double> random_array(Rng& rng, int rows, int cols, double scale = 1.0) {
  Array<double> a(rows, cols);
  for (double& x : a.data) x = scale * standard_normal(rng);
  return a;
}

/// Applies m to every xyz triple of a (N, C*3) block.
inline Array<double> rotate_block(const Array<double>& v, const std::array<Vec3, 3>& m) {
  Array<double> out(v.rows, v.cols);
  for (std::size_t i = 0; i + 2 < v.data.size(); i += 3) {
    const Vec3 r = pgen::apply(m, Vec3{v.data[i], v.data[i + 1], v.data[i + 2]});
    for (int d = 0; d < 3; ++d) out.data[i + d] = r[d];
  }
  return out;
}

inline double max_abs_diff(const Array<double>& a, const Array<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

inline double max_abs(const Array<double>& a) {
  double m = 0;
  for (double x : a.data) m = std::max(m, std::abs(x));
  return m;
}

inline double relative_diff(const Array<double>& a, const Array<double>& b) {
  return max_abs_diff(a, b) / std::max(max_abs(b), 1e-300);
}

}  // namespace pgen::testing
