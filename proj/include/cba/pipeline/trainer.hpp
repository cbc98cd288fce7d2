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

// Two-stage training. The baseline stage optimizes the CTC/attention
// objective with the bias branch frozen; the CBA stage starts from the
// baseline weights and adds the bias loss over per-batch bias lists.

#ifndef CBA_PIPELINE_TRAINER_HPP_
#define CBA_PIPELINE_TRAINER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "cba/losses/losses.hpp"
#include "cba/model/model.hpp"
#include "cba/pipeline/config.hpp"
#include "cba/pipeline/io.hpp"

namespace cba::pipeline {

enum class Stage { kBaseline, kCba };

/// One teacher-forced training example.
struct Example {
  const nn::Matrix* features = nullptr;
  /// Word-piece ids without sos/eos.
  std::vector<int> targets;
  /// One bias label per target piece; empty when the bias branch is off.
  std::vector<int> bias_labels;
};

/// Per-utterance objective l_all. `bias_embeddings` with id < 0 disables
/// the bias term. Components are written to `parts` when given; dropout is
/// on when `dropout_rng` is given.
nn::Var example_loss(nn::Graph& g, const model::CbaModel& model, nn::Var bias_embeddings,
                     const Example& ex, const losses::TrainConfig& cfg,
                     losses::LossBreakdown* parts = nullptr, Rng* dropout_rng = nullptr);

struct TrainingData {
  const Dataset* train = nullptr;
  const bpe::BpeModel* bpe = nullptr;
  const bias::Gazetteer* gazetteer = nullptr;
  const bias::FrequencyTable* frequencies = nullptr;
};

struct StageOptions {
  Stage stage = Stage::kBaseline;
  int epochs = 1;
  std::string checkpoint_path;
  std::string log_path;
  /// Optimizer state for resuming; written after every epoch.
  std::string state_path;
  bool resume = false;
  std::ostream* progress = nullptr;
};

/// Trains `model` in place, writing the checkpoint, log and state files.
void train_stage(model::CbaModel& model, const TrainingData& data, const RunConfig& rc,
                 const StageOptions& opts);

}  // namespace cba::pipeline

#endif  // CBA_PIPELINE_TRAINER_HPP_
