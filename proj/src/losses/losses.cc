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

#include "cba/losses/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cba/numeric/ops.hpp"
#include "cba/util/errors.hpp"

namespace cba::losses {
namespace {

using nn::log_add;
using nn::Matrix;
constexpr double kNegInf = nn::neg_inf<double>();

void check_target(const Matrix& log_probs, std::span<const int> target) {
  for (const int id : target) {
    if (id <= 0 || id >= log_probs.cols()) {
      throw std::invalid_argument("ctc: target id " + std::to_string(id) +
                                  " is blank or outside vocab of " +
                                  std::to_string(log_probs.cols()));
    }
  }
}

/// Blank-augmented label sequence: blank, y1, blank, y2, ..., blank.
std::vector<int> augment(std::span<const int> target) {
  std::vector<int> ext(2 * target.size() + 1, 0);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

bool can_skip(const std::vector<int>& ext, std::size_t s) {
  return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2];
}

Matrix forward(const Matrix& lp, const std::vector<int>& ext) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(ext.size());
  Matrix alpha = Matrix::Constant(T, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(ext, static_cast<std::size_t>(s))) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[static_cast<std::size_t>(s)]);
    }
  }
  return alpha;
}

/// beta(t, s): probability of emitting the rest after being in s at t,
/// excluding frame t itself.
Matrix backward(const Matrix& lp, const std::vector<int>& ext) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(ext.size());
  Matrix beta = Matrix::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[static_cast<std::size_t>(s)]);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1) + lp(t + 1, ext[static_cast<std::size_t>(s + 1)]));
      if (s + 2 < S && can_skip(ext, static_cast<std::size_t>(s + 2))) {
        b = log_add(b, beta(t + 1, s + 2) + lp(t + 1, ext[static_cast<std::size_t>(s + 2)]));
      }
      beta(t, s) = b;
    }
  }
  return beta;
}

double total(const Matrix& alpha) {
  const Eigen::Index T = alpha.rows(), S = alpha.cols();
  double v = alpha(T - 1, S - 1);
  if (S > 1) v = log_add(v, alpha(T - 1, S - 2));
  return v;
}

void check_labels(Eigen::Index rows, Eigen::Index cols, std::span<const int> labels,
                  const char* what) {
  if (static_cast<Eigen::Index>(labels.size()) > rows) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(rows) + " steps");
  }
  for (const int z : labels) {
    if (z < 0 || z >= cols) {
      throw std::invalid_argument(std::string(what) + ": label " + std::to_string(z) +
                                  " outside 0.." + std::to_string(cols - 1));
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda_ctc >= 0.0 && lambda_ctc <= 1.0)) throw ConfigError("train.lambda_ctc must be in [0,1]");
  if (!(beta_bias >= 0.0 && beta_bias <= 1.0)) throw ConfigError("train.beta_bias must be in [0,1]");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
}

double ctc_log_likelihood(const Matrix& log_probs, std::span<const int> target) {
  if (log_probs.rows() == 0) throw std::invalid_argument("ctc: no frames");
  check_target(log_probs, target);
  return total(forward(log_probs, augment(target)));
}

nn::Var ctc_log_likelihood(nn::Var log_probs, std::span<const int> target) {
  const Matrix& lp = log_probs.value();
  if (lp.rows() == 0) throw std::invalid_argument("ctc: no frames");
  check_target(lp, target);
  const std::vector<int> ext = augment(target);
  const Matrix alpha = forward(lp, ext);
  const double value = total(alpha);
  const int in = log_probs.id;
  nn::Graph& g = *log_probs.graph;
  return g.record(Matrix::Constant(1, 1, value), [in, ext, alpha, value](nn::Graph& gr,
                                                                         const Matrix& og) {
    if (value == kNegInf) return;
    const Matrix& lp = gr.value(in);
    const Matrix beta = backward(lp, ext);
    Matrix& gi = gr.grad(in);
    for (Eigen::Index t = 0; t < lp.rows(); ++t) {
      for (std::size_t s = 0; s < ext.size(); ++s) {
        const double joint = alpha(t, static_cast<Eigen::Index>(s)) + beta(t, static_cast<Eigen::Index>(s));
        if (joint == kNegInf) continue;
        gi(t, ext[s]) += og(0, 0) * std::exp(joint - value);
      }
    }
  });
}

double attention_log_likelihood(const Matrix& logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw std::invalid_argument("attention_log_likelihood: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(logits.rows()) + " steps");
  }
  check_labels(logits.rows(), logits.cols(), targets, "attention_log_likelihood");
  const Matrix lp = nn::log_softmax_rows(logits);
  double sum = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) sum += lp(static_cast<Eigen::Index>(t), targets[t]);
  return sum;
}

nn::Var attention_log_likelihood(nn::Var logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
    throw std::invalid_argument("attention_log_likelihood: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(logits.rows()) + " steps");
  }
  return nn::sum(nn::pick(nn::log_softmax_rows(logits), targets));
}

double bias_loss(const Matrix& probs, std::span<const int> labels) {
  check_labels(probs.rows(), probs.cols(), labels, "bias_loss");
  double loss = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    loss -= std::log(probs(static_cast<Eigen::Index>(t), labels[t]));
  }
  return loss;
}

nn::Var bias_loss(nn::Var scores, std::span<const int> labels) {
  check_labels(scores.rows(), scores.cols(), labels, "bias_loss");
  if (labels.empty()) return scores.graph->constant(Matrix::Zero(1, 1));
  nn::Var picked = nn::pick(nn::log_softmax_rows(scores), labels);
  return nn::scale(nn::sum(picked), -1.0);
}

LossBreakdown total_loss(double log_p_ctc, double log_p_attn, double l_bias,
                         const TrainConfig& cfg) {
  LossBreakdown b;
  b.log_p_ctc = log_p_ctc;
  b.log_p_attn = log_p_attn;
  b.l_mtl = cfg.lambda_ctc * log_p_ctc + (1.0 - cfg.lambda_ctc) * log_p_attn;
  b.l_bias = l_bias;
  b.l_all = -b.l_mtl + cfg.beta_bias * l_bias;
  return b;
}

LossBreakdown mean(std::span<const LossBreakdown> items) {
  LossBreakdown m;
  if (items.empty()) return m;
  for (const auto& b : items) {
    m.log_p_ctc += b.log_p_ctc;
    m.log_p_attn += b.log_p_attn;
    m.l_mtl += b.l_mtl;
    m.l_bias += b.l_bias;
    m.l_all += b.l_all;
  }
  const double n = static_cast<double>(items.size());
  m.log_p_ctc /= n;
  m.log_p_attn /= n;
  m.l_mtl /= n;
  m.l_bias /= n;
  m.l_all /= n;
  return m;
}

}  // namespace cba::losses
