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

// Pipeline steps behind the `cba` subcommands. Usage problems raise
// ConfigError; everything else is a runtime failure.

#ifndef CBA_PIPELINE_COMMANDS_HPP_
#define CBA_PIPELINE_COMMANDS_HPP_

#include <iosfwd>
#include <optional>
#include <string>

#include "cba/metrics/metrics.hpp"
#include "cba/pipeline/config.hpp"
#include "cba/pipeline/trainer.hpp"

namespace cba::pipeline {

/// File names inside the data directory.
namespace files {
inline constexpr const char* kBpeModel = "bpe.model";
inline constexpr const char* kGazetteer = "gazetteer.tsv";
inline constexpr const char* kFrequencies = "freq.tsv";
inline constexpr const char* kBiasList = "bias_test.bias";
inline constexpr const char* kBiasAssignments = "bias_test.assign";
inline constexpr const char* kDistractors = "distractors.txt";
}  // namespace files

inline constexpr const char* kSplits[] = {"train", "dev", "general_test", "bias_test"};

void cmd_datagen(const RunConfig& rc, bool force);

/// Trains a tokenizer on the transcripts of `input` and saves it.
bpe::BpeModel cmd_tokenizer(const RunConfig& rc, const std::string& input,
                            const std::string& output);

/// Treats `refs` as one batch and writes its bias list and the
/// "id<TAB>phrase" assignments.
void cmd_bias_build(const RunConfig& rc, const std::string& refs, const std::string& list_out,
                    const std::string& assign_out);

struct TrainOptions {
  Stage stage = Stage::kBaseline;
  std::string init;
  /// Defaults to <exp_dir>/<stage>.ckpt.
  std::string output;
  bool resume = false;
  /// Overrides the configured epoch count.
  std::optional<int> epochs;
  std::ostream* progress = nullptr;
};

void cmd_train(const RunConfig& rc, const TrainOptions& opts);

struct DecodeOptions {
  std::string checkpoint;
  /// Either a split name in the data directory or an explicit feature file.
  std::string split;
  std::string features;
  std::string output;
  std::string bias_list;
  std::optional<double> bias_score;
  bool no_bias = false;
  /// Emit beam_size ranked lines per utterance.
  bool nbest = false;
  std::optional<int> jobs;
};

void cmd_decode(const RunConfig& rc, const DecodeOptions& opts);

struct EvalOptions {
  std::string refs;
  std::string hyps;
  std::string assignments;
  std::string output;
  std::string per_utterance;
};

metrics::EvalReport cmd_eval(const EvalOptions& opts);

/// Full command-line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cba::pipeline

#endif  // CBA_PIPELINE_COMMANDS_HPP_
