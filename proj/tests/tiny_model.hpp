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

// A d_model=8 model with one layer on each side and two bias phrases,
// small enough for finite differences over every parameter.

#ifndef CBA_TESTS_TINY_MODEL_HPP_
#define CBA_TESTS_TINY_MODEL_HPP_

#include "cba/model/model.hpp"
#include "cba/numeric/grad_check.hpp"
#include "cba/numeric/optim.hpp"
#include "cba/pipeline/trainer.hpp"

namespace cba::testing {

inline model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.d_feat = 4;
  cfg.d_model = 8;
  cfg.num_encoder_layers = 1;
  cfg.num_decoder_layers = 1;
  cfg.num_heads = 2;
  cfg.d_ff = 12;
  cfg.vocab_size = 9;
  cfg.bias_embed_dim = 5;
  cfg.bias_lstm_hidden = 6;
  return cfg;
}

struct TinyCase {
  model::CbaModel model;
  nn::Matrix features;
  pipeline::Example example;
  std::vector<std::vector<int>> phrases;

  explicit TinyCase(std::uint64_t seed) : model(tiny_config(), seed) {
    Rng rng(seed + 1);
    features = nn::uniform_init(6, tiny_config().d_feat, 1, rng);
    example.features = &features;
    example.targets = {4, 5, 7};
    example.bias_labels = {0, 2, 2};
    phrases = {{6, 4}, {5, 7}};
  }
  TinyCase(const TinyCase&) = delete;

  /// Full objective including the bias term.
  nn::Var loss(nn::Graph& g) const {
    losses::TrainConfig cfg;
    return pipeline::example_loss(g, model, model.bias_encode(g, phrases), example, cfg);
  }

  double grad_check() {
    return nn::grad_check(model.params(), [this](nn::Graph& g) { return loss(g); }, 1e-5);
  }
};

}  // namespace cba::testing

#endif  // CBA_TESTS_TINY_MODEL_HPP_
