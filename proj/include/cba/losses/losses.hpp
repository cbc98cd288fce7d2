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

#ifndef CBA_LOSSES_LOSSES_HPP_
#define CBA_LOSSES_LOSSES_HPP_

#include <cstdint>
#include <span>

#include "cba/numeric/graph.hpp"

namespace cba::losses {

struct TrainConfig {
  double lambda_ctc = 0.3;
  double beta_bias = 0.5;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossBreakdown {
  double log_p_ctc = 0.0;
  double log_p_attn = 0.0;
  double l_mtl = 0.0;
  double l_bias = 0.0;
  double l_all = 0.0;
};

/// log p(target | X) under CTC; rows of `log_probs` are normalized
/// log-distributions with blank at id 0. -inf when no alignment fits.
double ctc_log_likelihood(const nn::Matrix& log_probs, std::span<const int> target);

/// Differentiable variant; the gradient w.r.t. log_probs(t, k) is the
/// posterior occupancy of label k at frame t.
nn::Var ctc_log_likelihood(nn::Var log_probs, std::span<const int> target);

/// Sum over steps of log_softmax(logits)[step, targets[step]].
double attention_log_likelihood(const nn::Matrix& logits, std::span<const int> targets);
nn::Var attention_log_likelihood(nn::Var logits, std::span<const int> targets);

/// -sum_t log probs(t, labels[t]); one probability row per step.
double bias_loss(const nn::Matrix& probs, std::span<const int> labels);
/// Same from pre-softmax scores, computed through log_softmax.
nn::Var bias_loss(nn::Var scores, std::span<const int> labels);

/// Combines per-utterance components.
LossBreakdown total_loss(double log_p_ctc, double log_p_attn, double l_bias,
                         const TrainConfig& cfg);
/// Component-wise mean over utterances.
LossBreakdown mean(std::span<const LossBreakdown> items);

}  // namespace cba::losses

#endif  // CBA_LOSSES_LOSSES_HPP_
