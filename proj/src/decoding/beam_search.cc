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

#include "cba/decoding/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "cba/util/errors.hpp"

namespace cba::decoding {
namespace {

constexpr double kNegInf = nn::neg_inf<double>();

double mix(double lambda, double ctc, double attn) {
  if (lambda == 0.0) return attn;
  if (lambda == 1.0) return ctc;
  return lambda * ctc + (1.0 - lambda) * attn;
}

struct Search {
  const model::CbaModel& model;
  const BiasContext& bias;
  const DecodeConfig& cfg;
  model::EncoderOutput enc;
  nn::Matrix ctc_logits;
  nn::Matrix ctc_log_probs;

  Search(const model::CbaModel& m, const nn::Matrix& features, const BiasContext& b,
         const DecodeConfig& c)
      : model(m), bias(b), cfg(c), enc(m.encode(features)) {
    ctc_logits = m.ctc_logits(enc);
    ctc_log_probs = nn::log_softmax_rows(ctc_logits);
  }

  struct Step {
    nn::RowVector attn_log_probs;
    nn::Matrix boosted_ctc;
    bool boosted = false;

    const nn::Matrix& ctc(const Search& s) const { return boosted ? boosted_ctc : s.ctc_log_probs; }
  };

  /// Decoder step for `prefix` with posterior adaptation applied.
  Step step(std::span<const int> prefix) const {
    const model::DecoderStepOutput out = model.decoder_step(prefix, enc);
    Step st;
    nn::RowVector logits = out.logits;
    if (cfg.enable_bias && !bias.empty()) {
      const nn::RowVector probs = model.bias_attend(out.context, bias.embeddings);
      if (const auto k = select_bias_phrase(probs)) {
        const auto& pieces = bias.pieces[static_cast<std::size_t>(*k - 1)];
        logits = boost_attention_logits(logits, pieces, cfg.bias_score);
        st.boosted_ctc = nn::log_softmax_rows(
            boost_ctc_logits(ctc_logits, pieces, out.source_attention, cfg.bias_score));
        st.boosted = true;
      }
    }
    st.attn_log_probs = nn::log_softmax_rows(logits);
    return st;
  }
};

struct Candidate {
  double score;
  int token;
  long long age;
  std::size_t hyp;
  double ctc;
  double attn;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.token != b.token) return a.token < b.token;
  return a.age < b.age;
}

NBestEntry to_entry(const Hypothesis& h) {
  NBestEntry e;
  e.tokens.assign(h.tokens.begin() + 1, h.tokens.end() - 1);
  e.joint_score = h.joint_score;
  e.normalized_score = h.joint_score / static_cast<double>(h.tokens.size() - 1);
  e.ctc_log = h.ctc_prefix_log;
  e.attn_log = h.attn_log_score;
  return e;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("decode.beam_size must be >= 1");
  if (!(bias_score >= 0.0)) throw ConfigError("decode.bias_score must be >= 0");
  if (!(max_len_ratio > 0.0)) throw ConfigError("decode.max_len_ratio must be > 0");
  if (!(lambda_ctc >= 0.0 && lambda_ctc <= 1.0)) {
    throw ConfigError("decode.lambda_ctc must be in [0,1]");
  }
}

BiasContext BiasContext::build(const model::CbaModel& model, const bias::BiasList& list,
                               const bpe::BpeModel& bpe) {
  BiasContext ctx;
  const auto phrases = model::tokenize_phrases(list, bpe);
  ctx.embeddings = model.bias_encode(phrases);
  for (const auto& ids : phrases) {
    std::set<int> distinct(ids.begin(), ids.end());
    ctx.pieces.emplace_back(distinct.begin(), distinct.end());
  }
  return ctx;
}

std::optional<int> select_bias_phrase(const nn::RowVector& probs) {
  if (probs.size() == 0) return std::nullopt;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs(i) > probs(best)) best = i;
  }
  if (best == 0) return std::nullopt;
  return static_cast<int>(best);
}

nn::RowVector boost_attention_logits(const nn::RowVector& logits, std::span<const int> pieces,
                                     double bias_score) {
  nn::RowVector out = logits;
  const std::set<int> distinct(pieces.begin(), pieces.end());
  for (const int u : distinct) {
    if (u < 0 || u >= out.size()) {
      throw std::invalid_argument("boost: piece id " + std::to_string(u) + " out of range");
    }
    out(u) += bias_score;
  }
  return out;
}

nn::RowVector boost_attention_logits(const nn::RowVector& logits, int phrase_index,
                                     const bias::BiasList& list, const bpe::BpeModel& bpe,
                                     double bias_score) {
  const auto seq = bpe.encode(list.phrase(phrase_index));
  return boost_attention_logits(logits, seq.ids, bias_score);
}

nn::Matrix boost_ctc_logits(const nn::Matrix& ctc_logits, std::span<const int> pieces,
                            const nn::RowVector& source_attention, double bias_score) {
  if (source_attention.size() != ctc_logits.rows()) {
    throw std::invalid_argument("boost_ctc_logits: attention over " +
                                std::to_string(source_attention.size()) + " frames, logits have " +
                                std::to_string(ctc_logits.rows()));
  }
  nn::Matrix out = ctc_logits;
  const std::set<int> distinct(pieces.begin(), pieces.end());
  for (const int u : distinct) {
    if (u < 0 || u >= out.cols()) {
      throw std::invalid_argument("boost: piece id " + std::to_string(u) + " out of range");
    }
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, u) += bias_score * source_attention(i);
  }
  return out;
}

std::vector<NBestEntry> joint_beam_search(const model::CbaModel& model,
                                          const nn::Matrix& features, const BiasContext& bias,
                                          const DecodeConfig& cfg, int nbest) {
  cfg.validate();
  const Search search(model, features, bias, cfg);
  const Eigen::Index frames = search.enc.length();
  const int vocab = model.config().vocab_size;
  const int max_len =
      std::max(1, static_cast<int>(std::floor(cfg.max_len_ratio * static_cast<double>(frames))));

  std::vector<Hypothesis> running(1);
  running[0].tokens = {bpe::kSos};
  running[0].ctc_state = ctc_initial_state(search.ctc_log_probs);
  long long next_age = 1;
  std::vector<Hypothesis> finished;

  for (int step = 0; step < max_len && !running.empty(); ++step) {
    const bool force_end = step + 1 == max_len;
    std::vector<Candidate> cands;
    for (std::size_t hi = 0; hi < running.size(); ++hi) {
      const Hypothesis& h = running[hi];
      const Search::Step st = search.step(h.tokens);
      const nn::RowVector psi = ctc_prefix_scores_all(h.ctc_state, st.ctc(search));
      for (int c = bpe::kEos; c < vocab; ++c) {
        if (force_end && c != bpe::kEos) continue;
        const double ctc = c == bpe::kEos ? ctc_eos_score(h.ctc_state) : psi(c);
        const double attn = h.attn_log_score + st.attn_log_probs(c);
        const double score = mix(cfg.lambda_ctc, ctc, attn);
        if (std::isnan(score) || score == kNegInf) continue;
        cands.push_back({score, c, h.age, hi, ctc, attn});
      }
    }
    const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(cfg.beam_size));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(), better);
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      const Hypothesis& parent = running[c.hyp];
      Hypothesis h;
      h.tokens = parent.tokens;
      h.tokens.push_back(c.token);
      h.attn_log_score = c.attn;
      h.ctc_prefix_log = c.ctc;
      h.joint_score = c.score;
      h.age = next_age++;
      if (c.token == bpe::kEos) {
        finished.push_back(std::move(h));
      } else {
        h.ctc_state = ctc_prefix_score(parent.ctc_state, c.token, search.ctc_log_probs);
        next.push_back(std::move(h));
      }
    }
    running = std::move(next);
  }

  if (finished.empty()) {
    throw DecodeError("beam search: no finite hypothesis (encoded frames " +
                      std::to_string(frames) + ", max length " + std::to_string(max_len) +
                      ", beam " + std::to_string(cfg.beam_size) + ")");
  }
  std::vector<NBestEntry> out;
  for (const auto& h : finished) out.push_back(to_entry(h));
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out[a].normalized_score != out[b].normalized_score) {
      return out[a].normalized_score > out[b].normalized_score;
    }
    return finished[a].age < finished[b].age;
  });
  std::vector<NBestEntry> sorted;
  for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < std::max(1, nbest); ++i) {
    sorted.push_back(std::move(out[order[i]]));
  }
  return sorted;
}

NBestEntry rescore(const model::CbaModel& model, const nn::Matrix& features,
                   std::span<const int> tokens, const BiasContext& bias, const DecodeConfig& cfg) {
  const Search search(model, features, bias, cfg);
  Hypothesis h;
  h.tokens = {bpe::kSos};
  h.ctc_state = ctc_initial_state(search.ctc_log_probs);
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const int c = i < tokens.size() ? tokens[i] : bpe::kEos;
    const Search::Step st = search.step(h.tokens);
    h.attn_log_score += st.attn_log_probs(c);
    if (c == bpe::kEos) {
      h.ctc_prefix_log = ctc_eos_score(h.ctc_state);
    } else {
      h.ctc_prefix_log = ctc_prefix_scores_all(h.ctc_state, st.ctc(search))(c);
      h.ctc_state = ctc_prefix_score(h.ctc_state, c, search.ctc_log_probs);
    }
    h.tokens.push_back(c);
  }
  h.joint_score = mix(cfg.lambda_ctc, h.ctc_prefix_log, h.attn_log_score);
  return to_entry(h);
}

}  // namespace cba::decoding
