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

#ifndef CBA_NUMERIC_GRAD_CHECK_HPP_
#define CBA_NUMERIC_GRAD_CHECK_HPP_

#include <functional>
#include <string>

#include "cba/numeric/graph.hpp"

namespace cba::nn {

/// Builds a scalar loss on the given graph from the current parameter values.
using LossClosure = std::function<Var(Graph&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares backprop gradients against central differences entry by entry.
/// Relative error is max(0, |a - n| - r) / max(|a|, |n|, 1e-8), where
/// r = eps_mach * max(1, |loss|) / (2 * epsilon) is the rounding error of one
/// loss evaluation carried into the difference quotient. Throws ContractError if
/// two forward passes at the same point disagree, std::invalid_argument if
/// epsilon is outside (0, 1e-3]. Parameter gradients are overwritten.
GradCheckResult grad_check_detailed(ParameterStore& params, const LossClosure& closure,
                                    double epsilon);

inline double grad_check(ParameterStore& params, const LossClosure& closure, double epsilon) {
  return grad_check_detailed(params, closure, epsilon).max_rel_error;
}

}  // namespace cba::nn

#endif  // CBA_NUMERIC_GRAD_CHECK_HPP_
