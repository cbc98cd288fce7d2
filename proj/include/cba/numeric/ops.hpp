// Copyright (c) 2026 The CBA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Differentiable primitives. Every function records its result on the
// graph owning its first argument and throws std::invalid_argument naming
// the primitive and the offending shapes when inputs do not conform.

#ifndef CBA_NUMERIC_OPS_HPP_
#define CBA_NUMERIC_OPS_HPP_

#include <span>
#include <vector>

#include "cba/numeric/graph.hpp"
#include "cba/util/rng.hpp"

namespace cba::nn {

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// Adds a 1xC row to every row of a RxC matrix.
Var add_row(Var a, Var row);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Inverted dropout; identity when `rng` is null or p is 0.
Var dropout(Var a, double p, Rng* rng);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
/// Row-wise normalization with learned 1xC gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Gathers rows of `table` by id.
Var embedding(Var table, std::span<const int> ids);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);

/// 1x1 sum of all entries.
Var sum(Var a);
/// Column vector whose i-th entry is a(i, cols[i]); cols.size() <= rows.
Var pick(Var a, std::span<const int> cols);

/// x * W + b with W shaped in x out and b shaped 1 x out.
Var linear(Var x, Var weight, Var bias);
/// (q * k^T) * scale
Var scaled_dot(Var q, Var k, double scale);

struct LstmState {
  Var h;
  Var c;
};

/// Standard four-gate cell, gate order [input, forget, cell, output].
/// x is BxI, h and c are BxH, w_x is Ix4H, w_h is Hx4H, b is 1x4H; rows
/// are independent sequences.
LstmState lstm_cell(Var x, LstmState prev, Var w_x, Var w_h, Var b);

enum class Primitive {
  kLinear,
  kSoftmaxRow,
  kLogSoftmaxRow,
  kLayerNorm,
  kAdd,
  kConcat,
  kScaledDot,
};

/// Uniform entry point over the fixed-arity primitives above; embedding
/// lookup and the LSTM cell take non-tensor arguments and are called
/// directly. kScaledDot uses 1/sqrt(cols of q) as its scale and kConcat
/// joins along columns.
Var forward_primitive(Primitive kind, std::span<const Var> inputs);

}  // namespace cba::nn

#endif  // CBA_NUMERIC_OPS_HPP_
