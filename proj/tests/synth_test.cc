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

#include <sstream>

#include "doctest.h"

#include "cba/synth/synth_data.hpp"
#include "cba/util/errors.hpp"
#include "cba/util/text.hpp"

using namespace cba;
using namespace cba::synth;

namespace {

int count_occurrences(const std::vector<Utterance>& utts, const std::string& phrase) {
  const std::string needle = " " + phrase + " ";
  int n = 0;
  for (const auto& u : utts) {
    const std::string hay = " " + u.text + " ";
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  }
  return n;
}

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.train_utterances = 400;
  return cfg;
}

}  // namespace

TEST_CASE("utterance features") {
  SynthConfig cfg;
  cfg.d_feat = 4;
  cfg.dur_min = cfg.dur_max = 2;
  cfg.noise_sigma = 0.0;
  Rng rng(1);
  const nn::Matrix templates = gen_templates(6, cfg, rng);
  CHECK(templates.cwiseAbs().maxCoeff() <= 1.0);
  const int ids[] = {5};
  const auto f = gen_utterance(ids, templates, cfg, rng);
  REQUIRE(f.length() == 2);
  CHECK(f.frames.row(0) == templates.row(5));
  CHECK(f.frames.row(1) == templates.row(5));

  CHECK_THROWS_AS(gen_utterance(std::span<const int>{}, templates, cfg, rng), std::invalid_argument);
  const int bad[] = {6};
  CHECK_THROWS_AS(gen_utterance(bad, templates, cfg, rng), std::invalid_argument);
}

TEST_CASE("noise averages out") {
  SynthConfig cfg;
  cfg.d_feat = 8;
  cfg.dur_min = cfg.dur_max = 1000;
  cfg.noise_sigma = 0.1;
  Rng rng(2);
  const nn::Matrix templates = gen_templates(5, cfg, rng);
  const int ids[] = {4};
  const auto f = gen_utterance(ids, templates, cfg, rng);
  const nn::RowVector mean = f.frames.colwise().mean();
  CHECK((mean - templates.row(4)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("corpus structure") {
  const SynthConfig cfg = small_config();
  const Corpus c = gen_corpus(cfg, 5);
  CHECK(c.common_words.size() == 50);
  CHECK(c.rare_phrases.size() == 30);
  CHECK(c.train.size() == 400);
  CHECK(c.bias_test.size() == 60);
  CHECK(c.general_test.size() == 60);
  CHECK(c.gazetteer.size() == 30);
  REQUIRE(c.bias_test_phrases.size() == c.bias_test.size());

  for (const auto& p : c.rare_phrases) {
    CHECK(count_occurrences(c.train, p) == 1);
    CHECK(c.gazetteer.find(p) != nullptr);
  }
  for (std::size_t i = 0; i < c.bias_test.size(); ++i) {
    REQUIRE(!c.bias_test_phrases[i].empty());
    for (const auto& p : c.bias_test_phrases[i]) {
      CHECK(count_occurrences({c.bias_test[i]}, p) >= 1);
    }
  }
  for (const auto& d : c.distractor_phrases) {
    CHECK(count_occurrences(c.train, d) == 0);
    CHECK(count_occurrences(c.bias_test, d) == 0);
    CHECK(count_occurrences(c.general_test, d) == 0);
  }
  for (const auto& u : c.general_test) {
    for (const auto& p : c.rare_phrases) CHECK(count_occurrences({u}, p) == 0);
  }
}

TEST_CASE("rare phrases can be held out of training") {
  SynthConfig cfg = small_config();
  cfg.rare_train_occurrences = 0;
  const Corpus c = gen_corpus(cfg, 5);
  for (const auto& p : c.rare_phrases) CHECK(count_occurrences(c.train, p) == 0);
}

TEST_CASE("same seed, same corpus") {
  const SynthConfig cfg = small_config();
  const Corpus a = gen_corpus(cfg, 77);
  const Corpus b = gen_corpus(cfg, 77);
  const Corpus other = gen_corpus(cfg, 78);
  auto texts = [](const Corpus& c) {
    std::string all;
    for (const auto& u : c.train) all += u.id + "\t" + u.text + "\n";
    for (const auto& u : c.bias_test) all += u.id + "\t" + u.text + "\n";
    return all;
  };
  CHECK(texts(a) == texts(b));
  CHECK(a.rare_phrases == b.rare_phrases);
  CHECK(texts(a) != texts(other));
}

TEST_CASE("feature files round trip") {
  SynthConfig cfg;
  Rng rng(3);
  const nn::Matrix templates = gen_templates(8, cfg, rng);
  const int ids[] = {4, 5, 6};
  std::vector<FeatureSequence> feats{gen_utterance(ids, templates, cfg, rng)};
  std::stringstream ss;
  write_features(ss, {"utt1"}, feats);
  std::vector<std::string> names;
  std::vector<FeatureSequence> back;
  read_features(ss, names, back);
  REQUIRE(back.size() == 1);
  CHECK(names[0] == "utt1");
  CHECK(back[0].frames == feats[0].frames);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.dur_min = 3;
  cfg.dur_max = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  SynthConfig few;
  few.syllables = 1;
  CHECK_THROWS_AS(few.validate(), ConfigError);
}
