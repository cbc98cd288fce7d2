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

// Incremental CTC prefix probabilities for joint decoding. For a prefix h
// the state keeps, per frame t, the log probability of all alignments of
// frames 0..t that collapse to h and end in a non-blank (r_n) or a blank
// (r_b).

#ifndef CBA_DECODING_CTC_PREFIX_HPP_
#define CBA_DECODING_CTC_PREFIX_HPP_

#include "cba/numeric/kernels.hpp"

namespace cba::decoding {

struct CtcPrefixState {
  nn::Vector r_n;
  nn::Vector r_b;
  /// Last emitted label, -1 for the empty prefix.
  int last = -1;
  /// log sum_v p(h . v | X) over all continuations v.
  double prefix_log = 0.0;
};

/// State of the empty prefix for T x V normalized log-probabilities.
CtcPrefixState ctc_initial_state(const nn::Matrix& log_probs);

/// Extends the prefix by `candidate` (not blank) and returns the new state,
/// with prefix_log set to the prefix probability of the extended prefix.
CtcPrefixState ctc_prefix_score(const CtcPrefixState& state, int candidate,
                                const nn::Matrix& log_probs);

/// Prefix probabilities of every extension h.c at once; entry c for the
/// blank column is -inf.
nn::RowVector ctc_prefix_scores_all(const CtcPrefixState& state, const nn::Matrix& log_probs);

/// log p(h | X): the prefix as a complete labelling.
double ctc_eos_score(const CtcPrefixState& state);

}  // namespace cba::decoding

#endif  // CBA_DECODING_CTC_PREFIX_HPP_
