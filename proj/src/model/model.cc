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

#include "cba/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cba/numeric/ops.hpp"
#include "cba/numeric/optim.hpp"
#include "cba/util/errors.hpp"

namespace cba::model {
namespace {

using nn::Matrix;
using nn::Var;

class Builder {
 public:
  Builder(nn::ParameterStore& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  nn::Parameter* uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                         Eigen::Index fan_in) {
    return &store_.add(name, nn::uniform_init(rows, cols, fan_in, rng_));
  }

  detail::Linear linear(const std::string& name, Eigen::Index in, Eigen::Index out) {
    detail::Linear l;
    l.w = uniform(name + ".w", in, out, in);
    l.b = uniform(name + ".b", 1, out, in);
    return l;
  }

  detail::Norm norm(const std::string& name, Eigen::Index dim) {
    detail::Norm n;
    n.gain = &store_.add(name + ".gain", Matrix::Ones(1, dim));
    n.bias = &store_.add(name + ".bias", Matrix::Zero(1, dim));
    return n;
  }

  detail::Attention attention(const std::string& name, Eigen::Index d) {
    return {linear(name + ".q", d, d), linear(name + ".k", d, d), linear(name + ".v", d, d),
            linear(name + ".o", d, d)};
  }

  detail::FeedForward feed_forward(const std::string& name, Eigen::Index d, Eigen::Index ff) {
    return {linear(name + ".in", d, ff), linear(name + ".out", ff, d)};
  }

 private:
  nn::ParameterStore& store_;
  Rng rng_;
};

Matrix causal_mask(Eigen::Index n) {
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r + 1; c < n; ++c) m(r, c) = nn::neg_inf<double>();
  }
  return m;
}

}  // namespace

void ModelConfig::validate(bool with_vocab) const {
  if (d_feat < 1 || d_model < 1 || d_ff < 1) throw ConfigError("model: dimensions must be >= 1");
  if (num_heads < 1 || d_model % num_heads != 0) {
    throw ConfigError("model.d_model must be divisible by model.num_heads");
  }
  if (num_encoder_layers < 0 || num_decoder_layers < 1) {
    throw ConfigError("model: need >= 0 encoder layers and >= 1 decoder layer");
  }
  if (with_vocab && vocab_size <= bpe::kReservedCount) {
    throw ConfigError("model.vocab_size must exceed the reserved ids");
  }
  if (bias_embed_dim < 1 || bias_lstm_hidden < 1) {
    throw ConfigError("model: bias dimensions must be >= 1");
  }
  if (subsample < 1) throw ConfigError("model.subsample must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must be in [0, 1)");
}

CbaModel::CbaModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const Eigen::Index d = cfg_.d_model;
  Builder b(params_, seed);
  input_proj_ = b.linear("encoder.input", cfg_.d_feat * cfg_.subsample, d);
  for (int i = 0; i < cfg_.num_encoder_layers; ++i) {
    const std::string p = "encoder.layers." + std::to_string(i);
    encoder_.push_back({b.norm(p + ".norm_att", d), b.attention(p + ".att", d),
                        b.norm(p + ".norm_ff", d), b.feed_forward(p + ".ff", d, cfg_.d_ff)});
  }
  encoder_norm_ = b.norm("encoder.norm", d);
  embed_ = b.uniform("decoder.embed", cfg_.vocab_size, d, 1);
  for (int i = 0; i < cfg_.num_decoder_layers; ++i) {
    const std::string p = "decoder.layers." + std::to_string(i);
    decoder_.push_back({b.norm(p + ".norm_self", d), b.attention(p + ".self_att", d),
                        b.norm(p + ".norm_src", d), b.attention(p + ".src_att", d),
                        b.norm(p + ".norm_ff", d), b.feed_forward(p + ".ff", d, cfg_.d_ff)});
  }
  decoder_norm_ = b.norm("decoder.norm", d);
  output_ = b.linear("decoder.output", d, cfg_.vocab_size);
  ctc_ = b.linear("ctc.output", d, cfg_.vocab_size);

  const Eigen::Index e = cfg_.bias_embed_dim, h = cfg_.bias_lstm_hidden;
  bias_embed_ = b.uniform("bias.embed", cfg_.vocab_size, e, 1);
  lstm_wx_ = b.uniform("bias.lstm.wx", e, 4 * h, h);
  lstm_wh_ = b.uniform("bias.lstm.wh", h, 4 * h, h);
  lstm_b_ = b.uniform("bias.lstm.b", 1, 4 * h, h);
  lstm_b_->value.block(0, h, 1, h).setOnes();
  no_bias_ = b.uniform("bias.no_bias", 1, h, h);
  bias_wq_ = b.uniform("bias.wq", d, d, d);
  bias_wk_ = b.uniform("bias.wk", h, d, h);
}

Var CbaModel::linear(nn::Graph& g, const detail::Linear& l, Var x) const {
  return nn::linear(x, g.param(*l.w), g.param(*l.b));
}

Var CbaModel::norm(nn::Graph& g, const detail::Norm& n, Var x) const {
  return nn::layer_norm(x, g.param(*n.gain), g.param(*n.bias));
}

Var CbaModel::feed_forward(nn::Graph& g, const detail::FeedForward& ff, Var x) const {
  return linear(g, ff.out, nn::relu(linear(g, ff.in, x)));
}

Var CbaModel::attention(nn::Graph& g, const detail::Attention& a, Var query, Var memory,
                        const Matrix* mask, Matrix* mean_weights) const {
  const Eigen::Index heads = cfg_.num_heads;
  const Eigen::Index dh = cfg_.d_model / heads;
  Var q = linear(g, a.q, query);
  Var k = linear(g, a.k, memory);
  Var v = linear(g, a.v, memory);
  std::vector<Var> outs;
  if (mean_weights != nullptr) *mean_weights = Matrix::Zero(query.rows(), memory.rows());
  for (Eigen::Index hd = 0; hd < heads; ++hd) {
    Var scores = nn::scaled_dot(nn::slice_cols(q, hd * dh, dh), nn::slice_cols(k, hd * dh, dh),
                                1.0 / std::sqrt(static_cast<double>(dh)));
    if (mask != nullptr) scores = nn::add(scores, g.constant(*mask));
    Var w = nn::softmax_rows(scores);
    if (mean_weights != nullptr) *mean_weights += w.value() / static_cast<double>(heads);
    outs.push_back(nn::matmul(w, nn::slice_cols(v, hd * dh, dh)));
  }
  Var joined = heads == 1 ? outs[0] : nn::concat_cols(outs);
  return linear(g, a.o, joined);
}

Var CbaModel::encode(nn::Graph& g, const Matrix& features, Rng* rng) const {
  if (features.rows() == 0) throw std::invalid_argument("encode: empty feature sequence");
  if (features.cols() != cfg_.d_feat) {
    throw std::invalid_argument("encode: features have " + std::to_string(features.cols()) +
                                " dims, model expects " + std::to_string(cfg_.d_feat));
  }
  const Eigen::Index s = cfg_.subsample;
  const Eigen::Index t_out = cfg_.encoded_length(features.rows());
  Matrix stacked = Matrix::Zero(t_out, s * features.cols());
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    stacked.block(t / s, (t % s) * features.cols(), 1, features.cols()) = features.row(t);
  }
  Var x = linear(g, input_proj_, g.constant(std::move(stacked)));
  const double p = cfg_.dropout;
  x = nn::dropout(nn::add(x, g.constant(nn::sinusoidal_positions(t_out, cfg_.d_model))), p, rng);
  for (const auto& layer : encoder_) {
    Var n1 = norm(g, layer.norm_att, x);
    x = nn::add(x, nn::dropout(attention(g, layer.att, n1, n1, nullptr, nullptr), p, rng));
    x = nn::add(x, nn::dropout(feed_forward(g, layer.ff, norm(g, layer.norm_ff, x)), p, rng));
  }
  return norm(g, encoder_norm_, x);
}

DecoderOutputs CbaModel::decode(nn::Graph& g, Var encoded, std::span<const int> tokens,
                                Rng* rng) const {
  if (tokens.empty() || tokens[0] != bpe::kSos) {
    throw std::invalid_argument("decode: prefix must start with sos");
  }
  for (const int t : tokens) {
    if (t < 0 || t >= cfg_.vocab_size) {
      throw std::invalid_argument("decode: token id " + std::to_string(t) + " out of range");
    }
  }
  const auto len = static_cast<Eigen::Index>(tokens.size());
  Var x = nn::embedding(g.param(*embed_), tokens);
  const double p = cfg_.dropout;
  x = nn::dropout(nn::add(x, g.constant(nn::sinusoidal_positions(len, cfg_.d_model))), p, rng);
  const Matrix mask = causal_mask(len);
  DecoderOutputs out;
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const auto& layer = decoder_[i];
    const bool last = i + 1 == decoder_.size();
    Var n1 = norm(g, layer.norm_self, x);
    x = nn::add(x, nn::dropout(attention(g, layer.self_att, n1, n1, &mask, nullptr), p, rng));
    Var ctx = attention(g, layer.src_att, norm(g, layer.norm_src, x), encoded, nullptr,
                        last ? &out.source_attention : nullptr);
    if (last) out.context = ctx;
    x = nn::add(x, nn::dropout(ctx, p, rng));
    x = nn::add(x, nn::dropout(feed_forward(g, layer.ff, norm(g, layer.norm_ff, x)), p, rng));
  }
  out.logits = linear(g, output_, norm(g, decoder_norm_, x));
  return out;
}

Var CbaModel::ctc_logits(nn::Graph& g, Var encoded) const { return linear(g, ctc_, encoded); }

Var CbaModel::bias_encode(nn::Graph& g, const std::vector<std::vector<int>>& phrases) const {
  Var no_bias = g.param(*no_bias_);
  if (phrases.empty()) return no_bias;
  const auto n = static_cast<Eigen::Index>(phrases.size());
  const Eigen::Index h = cfg_.bias_lstm_hidden;
  std::size_t steps = 0;
  for (const auto& p : phrases) {
    if (p.empty()) throw std::invalid_argument("bias_encode: phrase with no word pieces");
    steps = std::max(steps, p.size());
  }
  Var table = g.param(*bias_embed_);
  Var wx = g.param(*lstm_wx_), wh = g.param(*lstm_wh_), b = g.param(*lstm_b_);
  nn::LstmState state{g.constant(Matrix::Zero(n, h)), g.constant(Matrix::Zero(n, h))};
  std::vector<int> ids(phrases.size());
  for (std::size_t s = 0; s < steps; ++s) {
    bool ragged = false;
    Matrix keep(n, h);
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      const bool active = s < phrases[i].size();
      ids[i] = phrases[i][std::min(s, phrases[i].size() - 1)];
      keep.row(static_cast<Eigen::Index>(i)).setConstant(active ? 1.0 : 0.0);
      ragged = ragged || !active;
    }
    nn::LstmState next = nn::lstm_cell(nn::embedding(table, ids), state, wx, wh, b);
    if (ragged) {
      // Finished phrases keep their final state.
      Var on = g.constant(keep);
      Var off = g.constant(Matrix::Ones(n, h) - keep);
      next.h = nn::add(nn::mul(on, next.h), nn::mul(off, state.h));
      next.c = nn::add(nn::mul(on, next.c), nn::mul(off, state.c));
    }
    state = next;
  }
  const Var rows[] = {no_bias, state.h};
  return nn::concat_rows(rows);
}

Var CbaModel::bias_scores(nn::Graph& g, Var context, Var embeddings) const {
  if (context.cols() != cfg_.d_model || embeddings.cols() != cfg_.bias_lstm_hidden) {
    throw std::invalid_argument("bias_attend: context (" + std::to_string(context.rows()) + "x" +
                                std::to_string(context.cols()) + ") and embeddings (" +
                                std::to_string(embeddings.rows()) + "x" +
                                std::to_string(embeddings.cols()) + ") do not match the model");
  }
  Var q = nn::matmul(context, g.param(*bias_wq_));
  Var k = nn::matmul(embeddings, g.param(*bias_wk_));
  return nn::scaled_dot(q, k, 1.0 / std::sqrt(static_cast<double>(cfg_.d_model)));
}

EncoderOutput CbaModel::encode(const Matrix& features) const {
  nn::Graph g(false);
  return {encode(g, features).value()};
}

DecoderStepOutput CbaModel::decoder_step(std::span<const int> prefix,
                                         const EncoderOutput& enc) const {
  nn::Graph g(false);
  DecoderOutputs out = decode(g, g.constant(enc.states), prefix);
  const Eigen::Index last = out.logits.rows() - 1;
  return {out.logits.value().row(last), out.context.value().row(last),
          out.source_attention.row(last)};
}

Matrix CbaModel::ctc_logits(const EncoderOutput& enc) const {
  nn::Graph g(false);
  return ctc_logits(g, g.constant(enc.states)).value();
}

BiasEmbeddings CbaModel::bias_encode(const std::vector<std::vector<int>>& phrases) const {
  nn::Graph g(false);
  return {bias_encode(g, phrases).value()};
}

BiasEmbeddings CbaModel::bias_encode(const bias::BiasList& phrases,
                                     const bpe::BpeModel& bpe) const {
  return bias_encode(tokenize_phrases(phrases, bpe));
}

nn::RowVector CbaModel::bias_attend(const nn::RowVector& context,
                                    const BiasEmbeddings& emb) const {
  nn::Graph g(false);
  Var scores = bias_scores(g, g.constant(context), g.constant(emb.rows));
  return nn::softmax_rows(scores.value());
}

std::vector<std::vector<int>> tokenize_phrases(const bias::BiasList& phrases,
                                               const bpe::BpeModel& bpe) {
  std::vector<std::vector<int>> out;
  for (int i = 1; i <= phrases.size(); ++i) {
    auto seq = bpe.encode(phrases.phrase(i));
    if (seq.empty()) {
      throw std::invalid_argument("bias_encode: phrase '" + phrases.phrase(i) +
                                  "' has no word pieces");
    }
    out.push_back(std::move(seq.ids));
  }
  return out;
}

}  // namespace cba::model
