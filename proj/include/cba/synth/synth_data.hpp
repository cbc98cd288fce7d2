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

// Learnable stand-in for speech: every word piece owns a feature template,
// an utterance repeats each template for a random duration and adds
// Gaussian noise. Words are built from consonant-vowel syllables so rare
// phrases reuse pieces that common words train.

#ifndef CBA_SYNTH_SYNTH_DATA_HPP_
#define CBA_SYNTH_SYNTH_DATA_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cba/bias/bias_corpus.hpp"
#include "cba/numeric/kernels.hpp"
#include "cba/util/rng.hpp"

namespace cba::synth {

inline constexpr std::string_view kFeatureHeader = "CBA-FEAT v1";

struct FeatureSequence {
  /// T x d_feat
  nn::Matrix frames;

  Eigen::Index length() const { return frames.rows(); }
};

/// Consonant-vowel syllables available to the generator.
inline constexpr int kMaxSyllables = 70;

struct SynthConfig {
  int d_feat = 16;
  int dur_min = 2;
  int dur_max = 5;
  double noise_sigma = 0.1;
  /// Size of the per-corpus CV syllable inventory all words are spelled from.
  int syllables = 24;
  int vocab_words = 50;
  int function_words = 8;
  int rare_phrase_count = 30;
  int rare_train_occurrences = 1;
  int min_sentence_words = 4;
  int max_sentence_words = 7;
  int train_utterances = 1500;
  int dev_utterances = 60;
  int general_test_utterances = 60;
  int bias_test_utterances = 60;
  /// Novel name-like phrases that never occur in any split.
  int distractor_pool = 100;

  void validate() const;
};

/// Frames for a piece sequence: each template repeated U{dur_min..dur_max}
/// times, plus i.i.d. N(0, noise_sigma^2) per entry.
FeatureSequence gen_utterance(std::span<const int> piece_ids, const nn::Matrix& templates,
                              const SynthConfig& cfg, Rng& rng);

/// One Uniform(-1, 1)^d_feat row per vocabulary id.
nn::Matrix gen_templates(int vocab_size, const SynthConfig& cfg, Rng& rng);

struct Utterance {
  std::string id;
  std::string text;
};

struct Corpus {
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<Utterance> general_test;
  std::vector<Utterance> bias_test;
  std::vector<std::string> common_words;
  std::vector<std::string> function_words;
  std::vector<std::string> rare_phrases;
  std::vector<std::string> distractor_phrases;
  bias::Gazetteer gazetteer;
  bias::FrequencyTable frequencies;
  /// Per bias_test utterance, the rare phrases it contains.
  std::vector<std::vector<std::string>> bias_test_phrases;
};

Corpus gen_corpus(const SynthConfig& cfg, std::uint64_t seed);

void write_features(std::ostream& out, const std::vector<std::string>& ids,
                    const std::vector<FeatureSequence>& feats);
void read_features(std::istream& in, std::vector<std::string>& ids,
                   std::vector<FeatureSequence>& feats);

}  // namespace cba::synth

#endif  // CBA_SYNTH_SYNTH_DATA_HPP_
