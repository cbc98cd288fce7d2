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

#include "cba/numeric/optim.hpp"

#include <cmath>

namespace cba::nn {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  // Row-major fill so the draw order does not depend on storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

void Adam::step(ParameterStore& params, const std::function<bool(const Parameter&)>& filter) {
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (auto& p : params) {
    if (filter && !filter(*p)) continue;
    auto [mit, m_new] = m_.try_emplace(p->name, Matrix::Zero(p->value.rows(), p->value.cols()));
    auto [vit, v_new] = v_.try_emplace(p->name, Matrix::Zero(p->value.rows(), p->value.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = opts_.beta1 * m + (1.0 - opts_.beta1) * p->grad;
    v = opts_.beta2 * v + (1.0 - opts_.beta2) * p->grad.cwiseAbs2();
    p->value.array() -=
        opts_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opts_.eps);
  }
}

double grad_norm(const ParameterStore& params) {
  double total = 0.0;
  for (const auto& p : params) total += p->grad.squaredNorm();
  return std::sqrt(total);
}

}  // namespace cba::nn
