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

// Joint CTC/attention beam search with bias-phrase posterior adaptation.
// At every step each live hypothesis attends over the bias list; when a
// phrase wins, its word pieces are boosted in the attention-decoder logits
// and, weighted by source attention, in the CTC logits, before candidates
// are ranked and pruned.

#ifndef CBA_DECODING_BEAM_SEARCH_HPP_
#define CBA_DECODING_BEAM_SEARCH_HPP_

#include <optional>
#include <span>
#include <vector>

#include "cba/bias/bias_corpus.hpp"
#include "cba/decoding/ctc_prefix.hpp"
#include "cba/model/model.hpp"
#include "cba/tokenizer/bpe.hpp"

namespace cba::decoding {

struct DecodeConfig {
  int beam_size = 4;
  double bias_score = 5.0;
  double max_len_ratio = 1.0;
  double lambda_ctc = 0.3;
  /// When false the bias branch is skipped entirely.
  bool enable_bias = true;

  void validate() const;
};

/// Bias list prepared once per decoding run.
struct BiasContext {
  model::BiasEmbeddings embeddings;
  /// Distinct word-piece ids per phrase; entry i belongs to phrase i + 1.
  std::vector<std::vector<int>> pieces;

  static BiasContext build(const model::CbaModel& model, const bias::BiasList& list,
                           const bpe::BpeModel& bpe);
  bool empty() const { return pieces.empty(); }
};

struct Hypothesis {
  /// Starts with sos; ends with eos once finished.
  std::vector<int> tokens;
  double attn_log_score = 0.0;
  CtcPrefixState ctc_state;
  /// CTC prefix log-probability used for scoring; the eos score once ended.
  double ctc_prefix_log = 0.0;
  double joint_score = 0.0;
  /// Creation order, the last tie-breaker.
  long long age = 0;
};

struct NBestEntry {
  /// Emitted tokens without sos and eos.
  std::vector<int> tokens;
  double joint_score = 0.0;
  /// joint_score divided by the emitted length including eos.
  double normalized_score = 0.0;
  double ctc_log = 0.0;
  double attn_log = 0.0;
};

/// Argmax phrase index; nullopt when the no-bias slot wins. Ties resolve to
/// the lowest index.
std::optional<int> select_bias_phrase(const nn::RowVector& probs);

/// Adds bias_score to every listed piece id (duplicates count once).
nn::RowVector boost_attention_logits(const nn::RowVector& logits, std::span<const int> pieces,
                                     double bias_score);
nn::RowVector boost_attention_logits(const nn::RowVector& logits, int phrase_index,
                                     const bias::BiasList& list, const bpe::BpeModel& bpe,
                                     double bias_score);

/// logits(i, u) += bias_score * source_attention(i) for every piece u.
nn::Matrix boost_ctc_logits(const nn::Matrix& ctc_logits, std::span<const int> pieces,
                            const nn::RowVector& source_attention, double bias_score);

/// N-best list sorted by normalized score, best first.
std::vector<NBestEntry> joint_beam_search(const model::CbaModel& model,
                                          const nn::Matrix& features, const BiasContext& bias,
                                          const DecodeConfig& cfg, int nbest = 1);

/// Scores a complete token sequence (no sos/eos) exactly as the search
/// would have accumulated it.
NBestEntry rescore(const model::CbaModel& model, const nn::Matrix& features,
                   std::span<const int> tokens, const BiasContext& bias, const DecodeConfig& cfg);

}  // namespace cba::decoding

#endif  // CBA_DECODING_BEAM_SEARCH_HPP_
