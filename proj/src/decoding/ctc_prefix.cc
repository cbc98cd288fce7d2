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

#include "cba/decoding/ctc_prefix.hpp"

#include <stdexcept>
#include <string>

#include "cba/tokenizer/bpe.hpp"

namespace cba::decoding {
namespace {

using nn::log_add;
constexpr double kNegInf = nn::neg_inf<double>();

void check_frames(const CtcPrefixState& state, const nn::Matrix& log_probs) {
  if (state.r_n.size() != log_probs.rows()) {
    throw std::invalid_argument("ctc prefix: state has " + std::to_string(state.r_n.size()) +
                                " frames, log_probs " + std::to_string(log_probs.rows()));
  }
}

}  // namespace

CtcPrefixState ctc_initial_state(const nn::Matrix& log_probs) {
  if (log_probs.rows() == 0) throw std::invalid_argument("ctc prefix: no frames");
  CtcPrefixState s;
  const Eigen::Index T = log_probs.rows();
  s.r_n = nn::Vector::Constant(T, kNegInf);
  s.r_b.resize(T);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    acc += log_probs(t, bpe::kBlank);
    s.r_b(t) = acc;
  }
  return s;
}

CtcPrefixState ctc_prefix_score(const CtcPrefixState& state, int c, const nn::Matrix& lp) {
  if (c == bpe::kBlank) throw std::invalid_argument("ctc prefix: blank is not a valid extension");
  if (c < 0 || c >= lp.cols()) {
    throw std::invalid_argument("ctc prefix: candidate " + std::to_string(c) + " out of range");
  }
  check_frames(state, lp);
  const Eigen::Index T = lp.rows();
  CtcPrefixState next;
  next.last = c;
  next.r_n.resize(T);
  next.r_b.resize(T);
  next.r_n(0) = state.last < 0 ? lp(0, c) : kNegInf;
  next.r_b(0) = kNegInf;
  double psi = next.r_n(0);
  for (Eigen::Index t = 1; t < T; ++t) {
    const double phi = log_add(state.r_b(t - 1), state.last == c ? kNegInf : state.r_n(t - 1));
    next.r_n(t) = log_add(next.r_n(t - 1), phi) + lp(t, c);
    next.r_b(t) = log_add(next.r_b(t - 1), next.r_n(t - 1)) + lp(t, bpe::kBlank);
    psi = log_add(psi, phi + lp(t, c));
  }
  next.prefix_log = psi;
  return next;
}

nn::RowVector ctc_prefix_scores_all(const CtcPrefixState& state, const nn::Matrix& lp) {
  check_frames(state, lp);
  const Eigen::Index T = lp.rows(), V = lp.cols();
  nn::RowVector psi(V);
  if (state.last < 0) {
    psi = lp.row(0);
  } else {
    psi.setConstant(kNegInf);
  }
  for (Eigen::Index t = 1; t < T; ++t) {
    const double phi_all = log_add(state.r_b(t - 1), state.r_n(t - 1));
    for (Eigen::Index c = 0; c < V; ++c) {
      const double phi = c == state.last ? state.r_b(t - 1) : phi_all;
      psi(c) = log_add(psi(c), phi + lp(t, c));
    }
  }
  psi(bpe::kBlank) = kNegInf;
  return psi;
}

double ctc_eos_score(const CtcPrefixState& state) {
  const Eigen::Index last = state.r_n.size() - 1;
  return log_add(state.r_n(last), state.r_b(last));
}

}  // namespace cba::decoding
