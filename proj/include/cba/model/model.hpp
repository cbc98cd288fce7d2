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

// Transformer encoder/decoder with a CTC head, an LSTM bias encoder and the
// bias attention head. Graph-level methods build differentiable forward
// passes for training; the plain-matrix methods run the same code on a
// non-recording graph for inference.

#ifndef CBA_MODEL_MODEL_HPP_
#define CBA_MODEL_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cba/bias/bias_corpus.hpp"
#include "cba/numeric/graph.hpp"
#include "cba/tokenizer/bpe.hpp"

namespace cba::model {

/// Prefix of every parameter that belongs to the bias encoder or the bias
/// attention head.
inline constexpr std::string_view kBiasPrefix = "bias.";

struct ModelConfig {
  int d_feat = 16;
  int d_model = 64;
  int num_encoder_layers = 2;
  int num_decoder_layers = 2;
  int num_heads = 4;
  int d_ff = 128;
  int vocab_size = 0;
  int bias_embed_dim = 64;
  int bias_lstm_hidden = 64;
  int subsample = 2;
  /// Applied to embeddings and sublayer outputs when training.
  double dropout = 0.1;

  /// vocab_size is checked only when `with_vocab` is set; it is unknown
  /// until a tokenizer exists.
  void validate(bool with_vocab = true) const;
  Eigen::Index encoded_length(Eigen::Index frames) const {
    return (frames + subsample - 1) / subsample;
  }
};

struct EncoderOutput {
  /// T' x d_model
  nn::Matrix states;

  Eigen::Index length() const { return states.rows(); }
};

struct DecoderStepOutput {
  nn::RowVector logits;
  /// Last-layer source-attention output, the bias attention query.
  nn::RowVector context;
  /// Head-averaged last-layer source attention over the T' frames.
  nn::RowVector source_attention;
};

/// (N+1) x bias_lstm_hidden; row 0 is the learned no-bias embedding.
struct BiasEmbeddings {
  nn::Matrix rows;

  Eigen::Index size() const { return rows.rows(); }
};

/// Teacher-forced decoder pass over a whole prefix.
struct DecoderOutputs {
  nn::Var logits;   // L x V
  nn::Var context;  // L x d_model
  /// L x T', values only.
  nn::Matrix source_attention;
};

namespace detail {

struct Linear {
  nn::Parameter* w = nullptr;
  nn::Parameter* b = nullptr;
};
struct Norm {
  nn::Parameter* gain = nullptr;
  nn::Parameter* bias = nullptr;
};
struct Attention {
  Linear q, k, v, o;
};
struct FeedForward {
  Linear in, out;
};
struct EncoderLayer {
  Norm norm_att;
  Attention att;
  Norm norm_ff;
  FeedForward ff;
};
struct DecoderLayer {
  Norm norm_self;
  Attention self_att;
  Norm norm_src;
  Attention src_att;
  Norm norm_ff;
  FeedForward ff;
};

}  // namespace detail

class CbaModel {
 public:
  CbaModel(const ModelConfig& cfg, std::uint64_t seed);
  CbaModel(CbaModel&&) = default;
  CbaModel& operator=(CbaModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // Graph level.
  /// A non-null `rng` turns on dropout.
  nn::Var encode(nn::Graph& g, const nn::Matrix& features, Rng* rng = nullptr) const;
  /// `tokens` starts with sos; row i of the outputs predicts tokens[i + 1].
  DecoderOutputs decode(nn::Graph& g, nn::Var encoded, std::span<const int> tokens,
                        Rng* rng = nullptr) const;
  nn::Var ctc_logits(nn::Graph& g, nn::Var encoded) const;
  /// Final LSTM states of every phrase under the no-bias row.
  nn::Var bias_encode(nn::Graph& g, const std::vector<std::vector<int>>& phrases) const;
  /// Pre-softmax bias attention scores, one row per context row.
  nn::Var bias_scores(nn::Graph& g, nn::Var context, nn::Var embeddings) const;

  // Inference.
  EncoderOutput encode(const nn::Matrix& features) const;
  DecoderStepOutput decoder_step(std::span<const int> prefix, const EncoderOutput& enc) const;
  nn::Matrix ctc_logits(const EncoderOutput& enc) const;
  BiasEmbeddings bias_encode(const bias::BiasList& phrases, const bpe::BpeModel& bpe) const;
  BiasEmbeddings bias_encode(const std::vector<std::vector<int>>& phrases) const;
  nn::RowVector bias_attend(const nn::RowVector& context, const BiasEmbeddings& emb) const;

 private:
  nn::Var attention(nn::Graph& g, const detail::Attention& a, nn::Var query, nn::Var memory,
                    const nn::Matrix* mask, nn::Matrix* mean_weights) const;
  nn::Var feed_forward(nn::Graph& g, const detail::FeedForward& ff, nn::Var x) const;
  nn::Var norm(nn::Graph& g, const detail::Norm& n, nn::Var x) const;
  nn::Var linear(nn::Graph& g, const detail::Linear& l, nn::Var x) const;

  ModelConfig cfg_;
  nn::ParameterStore params_;
  detail::Linear input_proj_;
  std::vector<detail::EncoderLayer> encoder_;
  detail::Norm encoder_norm_;
  nn::Parameter* embed_ = nullptr;
  std::vector<detail::DecoderLayer> decoder_;
  detail::Norm decoder_norm_;
  detail::Linear output_;
  detail::Linear ctc_;
  nn::Parameter* bias_embed_ = nullptr;
  nn::Parameter* lstm_wx_ = nullptr;
  nn::Parameter* lstm_wh_ = nullptr;
  nn::Parameter* lstm_b_ = nullptr;
  nn::Parameter* no_bias_ = nullptr;
  nn::Parameter* bias_wq_ = nullptr;
  nn::Parameter* bias_wk_ = nullptr;
};

/// Word-piece ids of every phrase in the list, in index order.
std::vector<std::vector<int>> tokenize_phrases(const bias::BiasList& phrases,
                                               const bpe::BpeModel& bpe);

}  // namespace cba::model

#endif  // CBA_MODEL_MODEL_HPP_
