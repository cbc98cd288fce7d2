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

#include "cba/numeric/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cba/util/errors.hpp"

namespace cba::nn {
namespace {

double evaluate(const LossClosure& closure) {
  Graph g(false);
  return closure(g).scalar();
}

}  // namespace

GradCheckResult grad_check_detailed(ParameterStore& params, const LossClosure& closure,
                                    double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw std::invalid_argument("grad_check: epsilon must lie in (0, 1e-3]");
  }
  const double base = evaluate(closure);
  if (evaluate(closure) != base) {
    throw ContractError("grad_check: closure is not deterministic");
  }

  params.zero_grad();
  {
    Graph g;
    g.backward(closure(g));
  }

  // Entries whose gradient vanishes (a key bias under softmax, say) would
  // otherwise report pure round-off as a relative error of order one.
  const double rounding =
      std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base)) / (2.0 * epsilon);
  GradCheckResult result;
  for (auto& p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + epsilon;
        const double up = evaluate(closure);
        p->value(r, c) = saved - epsilon;
        const double down = evaluate(closure);
        p->value(r, c) = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double analytic = p->grad(r, c);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double err = std::max(0.0, std::abs(analytic - numeric) - rounding) / denom;
        if (result.worst_row < 0 || err > result.max_rel_error) {
          result = {err, p->name, r, c, analytic, numeric};
        }
      }
    }
  }
  return result;
}

}  // namespace cba::nn
