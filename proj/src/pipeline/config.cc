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

#include "cba/pipeline/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>

#include "cba/util/errors.hpp"
#include "cba/util/text.hpp"

namespace cba::pipeline {
namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = to_lower(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + text + "'");
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& origin) {
  ConfigFile cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty() || key.find('.') == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key '" + key +
                        "' must look like section.name");
    }
    cfg.values_[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse(in, path);
}

const std::string& ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

RunConfig RunConfig::from(const ConfigFile& file, const std::vector<std::string>& required) {
  for (const auto& key : required) file.get(key);
  RunConfig rc;
  std::set<std::string> known;
  auto bind = [&](const std::string& key, const std::function<void(const std::string&)>& set) {
    known.insert(key);
    if (file.has(key)) set(file.get(key));
  };
  auto bind_int = [&](const std::string& key, int& dst) {
    bind(key, [&](const std::string& v) { dst = parse_number<int>(key, v); });
  };
  auto bind_double = [&](const std::string& key, double& dst) {
    bind(key, [&](const std::string& v) { dst = parse_number<double>(key, v); });
  };

  bind("run.seed", [&](const std::string& v) { rc.seed = parse_number<std::uint64_t>("run.seed", v); });
  bind("paths.data_dir", [&](const std::string& v) { rc.data_dir = v; });
  bind("paths.exp_dir", [&](const std::string& v) { rc.exp_dir = v; });

  bind_int("synth.d_feat", rc.synth.d_feat);
  bind_int("synth.dur_min", rc.synth.dur_min);
  bind_int("synth.dur_max", rc.synth.dur_max);
  bind_double("synth.noise_sigma", rc.synth.noise_sigma);
  bind_int("synth.syllables", rc.synth.syllables);
  bind_int("synth.vocab_words", rc.synth.vocab_words);
  bind_int("synth.function_words", rc.synth.function_words);
  bind_int("synth.rare_phrase_count", rc.synth.rare_phrase_count);
  bind_int("synth.rare_train_occurrences", rc.synth.rare_train_occurrences);
  bind_int("synth.min_sentence_words", rc.synth.min_sentence_words);
  bind_int("synth.max_sentence_words", rc.synth.max_sentence_words);
  bind_int("synth.train_utterances", rc.synth.train_utterances);
  bind_int("synth.dev_utterances", rc.synth.dev_utterances);
  bind_int("synth.general_test_utterances", rc.synth.general_test_utterances);
  bind_int("synth.bias_test_utterances", rc.synth.bias_test_utterances);
  bind_int("synth.distractor_pool", rc.synth.distractor_pool);

  bind_int("tokenizer.vocab_size", rc.bpe_vocab_size);
  bind_int("tokenizer.min_pair_count", rc.bpe_min_pair_count);

  bind_int("model.d_model", rc.model.d_model);
  bind_int("model.num_encoder_layers", rc.model.num_encoder_layers);
  bind_int("model.num_decoder_layers", rc.model.num_decoder_layers);
  bind_int("model.num_heads", rc.model.num_heads);
  bind_int("model.d_ff", rc.model.d_ff);
  bind_double("model.dropout", rc.model.dropout);
  bind_int("model.bias_embed_dim", rc.model.bias_embed_dim);
  bind_int("model.bias_lstm_hidden", rc.model.bias_lstm_hidden);
  bind_int("model.subsample", rc.model.subsample);

  bind_double("train.lambda_ctc", rc.train.lambda_ctc);
  bind_double("train.beta_bias", rc.train.beta_bias);
  bind_double("train.learning_rate", rc.train.learning_rate);
  bind_int("train.batch_size", rc.train.batch_size);
  bind_int("train.baseline_epochs", rc.baseline_epochs);
  bind_int("train.cba_epochs", rc.cba_epochs);

  bind_int("bias.n_phrases_max", rc.bias.n_phrases_max);
  bind_int("bias.n_order_max", rc.bias.n_order_max);
  bind_int("bias.distractor_floor", rc.bias.distractor_floor);
  bind_double("bias.top_frequency_exclusion", rc.bias.top_frequency_exclusion);

  bind_int("decode.beam_size", rc.decode.beam_size);
  bind_double("decode.bias_score", rc.decode.bias_score);
  bind_double("decode.max_len_ratio", rc.decode.max_len_ratio);
  bind_double("decode.lambda_ctc", rc.decode.lambda_ctc);
  bind("decode.enable_bias", [&](const std::string& v) {
    rc.decode.enable_bias = parse_bool("decode.enable_bias", v);
  });
  bind_int("decode.jobs", rc.jobs);

  for (const auto& [key, value] : file.values()) {
    if (known.count(key) == 0) throw ConfigError("unknown config key: " + key);
  }
  if (const char* env = std::getenv("CBA_SEED"); env != nullptr && *env != '\0') {
    rc.seed = parse_number<std::uint64_t>("CBA_SEED", env);
  }
  rc.model.d_feat = rc.synth.d_feat;
  rc.train.seed = rc.seed;
  rc.train.epochs = rc.baseline_epochs;
  rc.synth.validate();
  rc.model.validate(false);
  rc.train.validate();
  rc.bias.validate();
  rc.decode.validate();
  if (rc.jobs < 1) throw ConfigError("decode.jobs must be >= 1");
  if (rc.baseline_epochs < 0 || rc.cba_epochs < 0) throw ConfigError("train epochs must be >= 0");
  return rc;
}

std::uint64_t RunConfig::model_seed() const { return seed ^ 0x6d6f64656cULL; }

}  // namespace cba::pipeline
