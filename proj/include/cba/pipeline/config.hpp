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

// Flat "section.key = value" run configuration. Lines starting with '#'
// are comments.

#ifndef CBA_PIPELINE_CONFIG_HPP_
#define CBA_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cba/bias/bias_corpus.hpp"
#include "cba/decoding/beam_search.hpp"
#include "cba/losses/losses.hpp"
#include "cba/model/model.hpp"
#include "cba/synth/synth_data.hpp"

namespace cba::pipeline {

class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& origin = "<config>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Throws ConfigError naming the key when absent.
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string exp_dir;
  synth::SynthConfig synth;
  int bpe_vocab_size = 96;
  int bpe_min_pair_count = 2;
  model::ModelConfig model;
  losses::TrainConfig train;
  int baseline_epochs = 10;
  int cba_epochs = 10;
  bias::BiasSamplingConfig bias;
  decoding::DecodeConfig decode;
  int jobs = 1;

  /// Reads every known key; unknown keys and missing required keys raise
  /// ConfigError. CBA_SEED, when set, overrides run.seed.
  static RunConfig from(const ConfigFile& file, const std::vector<std::string>& required);

  /// Stage-specific model seed so baseline and CBA initialize identically.
  std::uint64_t model_seed() const;
};

}  // namespace cba::pipeline

#endif  // CBA_PIPELINE_CONFIG_HPP_
