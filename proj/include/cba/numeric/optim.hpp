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

#ifndef CBA_NUMERIC_OPTIM_HPP_
#define CBA_NUMERIC_OPTIM_HPP_

#include <functional>
#include <map>
#include <string>

#include "cba/numeric/graph.hpp"
#include "cba/util/rng.hpp"

namespace cba::nn {

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(Options opts) : opts_(opts) {}

  /// Updates every parameter accepted by `filter` (all when empty).
  void step(ParameterStore& params,
            const std::function<bool(const Parameter&)>& filter = nullptr);

  long long steps() const { return t_; }

  /// Moments are exposed so training can be checkpointed and resumed.
  std::map<std::string, Matrix>& first_moments() { return m_; }
  std::map<std::string, Matrix>& second_moments() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  Options opts_;
  long long t_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

/// Global L2 norm of all gradients.
double grad_norm(const ParameterStore& params);

}  // namespace cba::nn

#endif  // CBA_NUMERIC_OPTIM_HPP_
