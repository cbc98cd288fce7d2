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

#include "cba/pipeline/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "cba/numeric/checkpoint.hpp"
#include "cba/numeric/ops.hpp"
#include "cba/numeric/optim.hpp"
#include "cba/util/text.hpp"

namespace cba::pipeline {
namespace {

using nn::Matrix;
using nn::Var;

constexpr std::string_view kMomentPrefix = "adam.m/";
constexpr std::string_view kVariancePrefix = "adam.v/";
constexpr std::string_view kStepKey = "adam.step";
constexpr std::string_view kEpochKey = "train.epoch";

bool is_bias_param(const nn::Parameter& p) { return starts_with(p.name, model::kBiasPrefix); }

void save_state(const std::string& path, nn::Adam& adam, int epoch) {
  std::vector<nn::NamedTensor> tensors;
  for (const auto& [name, m] : adam.first_moments()) tensors.push_back({std::string(kMomentPrefix) + name, m});
  for (const auto& [name, v] : adam.second_moments()) tensors.push_back({std::string(kVariancePrefix) + name, v});
  tensors.push_back({std::string(kStepKey), Matrix::Constant(1, 1, static_cast<double>(adam.steps()))});
  tensors.push_back({std::string(kEpochKey), Matrix::Constant(1, 1, epoch)});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  nn::write_tensors(out, tensors);
}

/// Restores the optimizer and returns the number of completed epochs.
int load_state(const std::string& path, nn::Adam& adam) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open training state " + path);
  int epoch = 0;
  for (auto& t : nn::read_tensors(in)) {
    if (starts_with(t.name, kMomentPrefix)) {
      adam.first_moments()[t.name.substr(kMomentPrefix.size())] = std::move(t.value);
    } else if (starts_with(t.name, kVariancePrefix)) {
      adam.second_moments()[t.name.substr(kVariancePrefix.size())] = std::move(t.value);
    } else if (t.name == kStepKey) {
      adam.set_steps(static_cast<long long>(t.value(0, 0)));
    } else if (t.name == kEpochKey) {
      epoch = static_cast<int>(t.value(0, 0));
    }
  }
  return epoch;
}

}  // namespace

Var example_loss(nn::Graph& g, const model::CbaModel& model, Var bias_embeddings,
                 const Example& ex, const losses::TrainConfig& cfg, losses::LossBreakdown* parts,
                 Rng* dropout_rng) {
  Var enc = model.encode(g, *ex.features, dropout_rng);
  Var ctc = losses::ctc_log_likelihood(nn::log_softmax_rows(model.ctc_logits(g, enc)), ex.targets);
  if (!std::isfinite(ctc.scalar())) {
    throw std::runtime_error("training example has no CTC alignment (" +
                             std::to_string(ex.features->rows()) + " frames, " +
                             std::to_string(ex.targets.size()) + " pieces)");
  }
  std::vector<int> inputs{bpe::kSos};
  inputs.insert(inputs.end(), ex.targets.begin(), ex.targets.end());
  std::vector<int> outputs(ex.targets.begin(), ex.targets.end());
  outputs.push_back(bpe::kEos);
  const model::DecoderOutputs dec = model.decode(g, enc, inputs, dropout_rng);
  Var attn = losses::attention_log_likelihood(dec.logits, outputs);

  Var mtl = nn::add(nn::scale(ctc, cfg.lambda_ctc), nn::scale(attn, 1.0 - cfg.lambda_ctc));
  Var total = nn::scale(mtl, -1.0);
  double l_bias = 0.0;
  if (bias_embeddings.id >= 0) {
    if (ex.bias_labels.size() != ex.targets.size()) {
      throw std::invalid_argument("example_loss: " + std::to_string(ex.bias_labels.size()) +
                                  " bias labels for " + std::to_string(ex.targets.size()) + " pieces");
    }
    // Row t of the decoder predicts targets[t]; the eos step carries no label.
    Var ctx = nn::slice_rows(dec.context, 0, static_cast<Eigen::Index>(ex.targets.size()));
    Var lb = losses::bias_loss(model.bias_scores(g, ctx, bias_embeddings), ex.bias_labels);
    l_bias = lb.scalar();
    total = nn::add(total, nn::scale(lb, cfg.beta_bias));
  }
  if (parts != nullptr) *parts = losses::total_loss(ctc.scalar(), attn.scalar(), l_bias, cfg);
  return total;
}

void train_stage(model::CbaModel& model, const TrainingData& data, const RunConfig& rc,
                 const StageOptions& opts) {
  const bool cba = opts.stage == Stage::kCba;
  losses::TrainConfig cfg = rc.train;
  if (!cba) cfg.beta_bias = 0.0;
  const Dataset& train = *data.train;
  if (train.size() == 0) throw std::runtime_error("training split is empty");

  nn::Adam adam({cfg.learning_rate, 0.9, 0.999, 1e-8});
  int first_epoch = 0;
  if (opts.resume && file_exists(opts.state_path)) {
    nn::load_checkpoint(opts.checkpoint_path, model.params());
    first_epoch = load_state(opts.state_path, adam);
  }
  std::ofstream log(opts.log_path, first_epoch > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open " + opts.log_path + " for writing");

  const auto filter = [cba](const nn::Parameter& p) { return cba || !is_bias_param(p); };
  const std::uint64_t stage_seed = cfg.seed ^ (cba ? 0xcbaULL : 0xba5eULL);
  const auto n = train.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = first_epoch; epoch < opts.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng = Rng::derive(stage_seed, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    std::vector<losses::LossBreakdown> epoch_parts;

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      const long long step = adam.steps() + 1;
      nn::Graph g;
      Var bias_emb{&g, -1};
      std::vector<Example> examples(end - start);
      std::vector<std::string> refs;
      for (std::size_t i = start; i < end; ++i) refs.push_back(train.utts[order[i]].text);
      for (std::size_t i = start; i < end; ++i) {
        Example& ex = examples[i - start];
        ex.features = &train.feats[order[i]].frames;
        ex.targets = train.tokens[order[i]].ids;
      }
      if (cba) {
        Rng batch_rng = Rng::derive(stage_seed, 0x100000000ULL + static_cast<std::uint64_t>(step));
        const bias::BatchBiasList bb = bias::build_batch_bias_list(
            refs, *data.gazetteer, rc.bias, *data.frequencies, batch_rng);
        bias_emb = model.bias_encode(g, model::tokenize_phrases(bb.list, *data.bpe));
        for (std::size_t i = 0; i < examples.size(); ++i) {
          std::vector<bias::AssignedPhrase> assigned;
          for (const int idx : bb.assignments[i]) assigned.push_back({idx, bb.list.phrase(idx)});
          examples[i].bias_labels = bias::make_bias_labels(train.tokens[order[start + i]], assigned);
        }
      }

      Rng dropout_rng = Rng::derive(stage_seed, 0x200000000ULL + static_cast<std::uint64_t>(step));
      std::vector<losses::LossBreakdown> parts(examples.size());
      Var sum;
      for (std::size_t i = 0; i < examples.size(); ++i) {
        Var l = example_loss(g, model, bias_emb, examples[i], cfg, &parts[i], &dropout_rng);
        sum = i == 0 ? l : nn::add(sum, l);
      }
      Var loss = nn::scale(sum, 1.0 / static_cast<double>(examples.size()));
      model.params().zero_grad();
      g.backward(loss);
      adam.step(model.params(), filter);

      const losses::LossBreakdown m = losses::mean(parts);
      epoch_parts.push_back(m);
      log << step << '\t' << format_fixed(m.l_all, 6) << '\t' << format_fixed(m.l_mtl, 6) << '\t'
          << format_fixed(m.l_bias, 6) << '\n';
    }
    log.flush();
    nn::save_checkpoint(opts.checkpoint_path, model.params());
    save_state(opts.state_path, adam, epoch + 1);
    if (opts.progress != nullptr) {
      const losses::LossBreakdown m = losses::mean(epoch_parts);
      *opts.progress << (cba ? "cba" : "baseline") << " epoch " << epoch + 1 << "/" << opts.epochs
                     << " l_all " << format_fixed(m.l_all, 4) << " l_bias "
                     << format_fixed(m.l_bias, 4) << std::endl;
    }
  }
  if (first_epoch >= opts.epochs) nn::save_checkpoint(opts.checkpoint_path, model.params());
}

}  // namespace cba::pipeline
