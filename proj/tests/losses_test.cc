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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "cba/losses/losses.hpp"
#include "cba/numeric/grad_check.hpp"
#include "cba/numeric/ops.hpp"

using namespace cba;
using nn::Matrix;

TEST_CASE("ctc single frame") {
  const Matrix lp = Matrix::Constant(1, 3, std::log(1.0 / 3.0));
  const int target[] = {1};
  CHECK(losses::ctc_log_likelihood(lp, target) == doctest::Approx(std::log(1.0 / 3.0)));
}

TEST_CASE("ctc against enumeration") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix lp = testing::random_log_probs(4, 3, rng);
    for (const auto& target : std::vector<std::vector<int>>{{1, 2}, {1, 1}, {2}, {}, {2, 1, 2}}) {
      const double want = testing::brute_ctc(lp, target);
      const double got = losses::ctc_log_likelihood(lp, target);
      if (std::isinf(want)) {
        CHECK(std::isinf(got));
      } else {
        CHECK(std::abs(got - want) < 1e-9);
      }
    }
  }
}

TEST_CASE("ctc without an alignment") {
  Rng rng(1);
  const Matrix lp = testing::random_log_probs(2, 3, rng);
  const int target[] = {1, 1};
  CHECK(losses::ctc_log_likelihood(lp, target) == -std::numeric_limits<double>::infinity());
  const int bad[] = {3};
  CHECK_THROWS_AS(losses::ctc_log_likelihood(lp, bad), std::invalid_argument);
  const int blank[] = {0};
  CHECK_THROWS_AS(losses::ctc_log_likelihood(lp, blank), std::invalid_argument);
}

TEST_CASE("ctc gradient") {
  Rng rng(5);
  nn::ParameterStore ps;
  auto& logits = ps.add("logits", testing::random_log_probs(5, 4, rng));
  const int target[] = {1, 3, 3};
  auto closure = [&](nn::Graph& g) {
    return losses::ctc_log_likelihood(nn::log_softmax_rows(g.param(logits)), target);
  };
  CHECK(nn::grad_check(ps, closure, 1e-5) <= 1e-6);
  nn::Graph g;
  CHECK(closure(g).scalar() == doctest::Approx(losses::ctc_log_likelihood(
                                   nn::log_softmax_rows(logits.value), target)));
}

TEST_CASE("attention log likelihood") {
  const int targets[] = {2, 0, 1, 1};
  CHECK(losses::attention_log_likelihood(Matrix::Zero(4, 5), targets) ==
        doctest::Approx(4.0 * std::log(1.0 / 5.0)));
  Matrix sharp = Matrix::Constant(4, 5, -1e4);
  for (int i = 0; i < 4; ++i) sharp(i, targets[i]) = 0.0;
  CHECK(losses::attention_log_likelihood(sharp, targets) == doctest::Approx(0.0));
  const int short_targets[] = {1};
  CHECK_THROWS(losses::attention_log_likelihood(sharp, short_targets));
}

TEST_CASE("bias loss") {
  const int labels[] = {0, 1, 1, 0};
  CHECK(losses::bias_loss(Matrix::Constant(4, 3, 1.0 / 3.0), labels) ==
        doctest::Approx(4.39445).epsilon(1e-5));
  Matrix certain = Matrix::Zero(4, 3);
  certain.col(0).setOnes();
  const int zeros[] = {0, 0, 0, 0};
  CHECK(losses::bias_loss(certain, zeros) == 0.0);
  Matrix half(1, 2);
  half << 0.5, 0.5;
  const int one[] = {1};
  CHECK(losses::bias_loss(half, one) == doctest::Approx(std::log(2.0)));
  const int out_of_range[] = {3};
  CHECK_THROWS(losses::bias_loss(half, out_of_range));

  nn::Graph g;
  CHECK(losses::bias_loss(g.constant(Matrix::Zero(4, 3)), labels).scalar() ==
        doctest::Approx(4.0 * std::log(3.0)));
}

TEST_CASE("combined objective") {
  losses::TrainConfig cfg;
  const auto parts = losses::total_loss(-10.0, -5.0, 2.0, cfg);
  CHECK(parts.l_mtl == doctest::Approx(-6.5));
  CHECK(parts.l_all == doctest::Approx(7.5));
  cfg.beta_bias = 0.0;
  const auto base = losses::total_loss(-10.0, -5.0, 2.0, cfg);
  CHECK(base.l_all == doctest::Approx(-base.l_mtl));

  const losses::LossBreakdown items[] = {parts, base};
  CHECK(losses::mean(items).l_all == doctest::Approx((7.5 + 6.5) / 2.0));
}
