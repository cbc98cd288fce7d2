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

#include "cba/synth/synth_data.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "cba/util/binary_io.hpp"
#include "cba/util/errors.hpp"
#include "cba/util/text.hpp"

namespace cba::synth {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

/// A small fixed set of CV syllables per corpus. Every word, common or
/// rare, is spelled from it, so each syllable recurs across many words.
std::vector<std::string> draw_syllables(Rng& rng, int count) {
  std::vector<std::string> all;
  for (const char c : kConsonants) {
    for (const char v : kVowels) all.push_back(std::string{c, v});
  }
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(count));
  return all;
}

std::string make_word(const std::vector<std::string>& syllables, Rng& rng, int min_syl,
                      int max_syl) {
  std::string w;
  const auto n = rng.uniform_int(min_syl, max_syl);
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& s = syllables[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(syllables.size()) - 1))];
    // A repeated syllable is one long stretch of the same template.
    if (w.ends_with(s)) return {};
    w += s;
  }
  return w;
}

/// Fresh word not yet in `taken`.
std::string unique_word(const std::vector<std::string>& syllables, Rng& rng, int min_syl,
                        int max_syl, std::set<std::string>& taken) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::string w = make_word(syllables, rng, min_syl, max_syl);
    if (!w.empty() && taken.insert(w).second) return w;
  }
  throw ConfigError("synth: could not generate enough distinct words");
}

/// Syllables of the common words split by word position. Rare words are
/// spelled from these so that every piece they use is heard in training.
struct PositionalSyllables {
  std::vector<std::string> initial;
  std::vector<std::string> medial;

  explicit PositionalSyllables(const std::vector<std::string>& words) {
    std::set<std::string> seen_initial, seen_medial;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.size(); i += 2) {
        const std::string syl = w.substr(i, 2);
        if (i == 0 ? seen_initial.insert(syl).second : seen_medial.insert(syl).second) {
          (i == 0 ? initial : medial).push_back(syl);
        }
      }
    }
    if (medial.empty()) medial = initial;
  }
};

std::string make_rare_word(const PositionalSyllables& syl, Rng& rng,
                           std::set<std::string>& taken) {
  auto pick = [&rng](const std::vector<std::string>& v) -> const std::string& {
    return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
  };
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const auto n = rng.uniform_int(2, 3);
    std::string w = pick(syl.initial);
    bool repeated = false;
    for (std::int64_t i = 1; i < n; ++i) {
      const std::string& s = pick(syl.medial);
      repeated = repeated || w.ends_with(s);
      w += s;
    }
    if (!repeated && taken.insert(w).second) return w;
  }
  throw ConfigError("synth: could not generate enough distinct phrases");
}

std::string make_phrase(const PositionalSyllables& syl, Rng& rng, std::set<std::string>& taken) {
  const auto words = rng.uniform_int(1, 2);
  std::vector<std::string> parts;
  for (std::int64_t i = 0; i < words; ++i) parts.push_back(make_rare_word(syl, rng, taken));
  return join(parts);
}

std::size_t draw_weighted(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

struct Grammar {
  std::vector<std::string> words;
  std::vector<double> start;
  std::vector<std::vector<double>> next;

  std::vector<std::string> sentence(int length, Rng& rng) const {
    std::vector<std::string> out;
    std::size_t w = draw_weighted(start, rng);
    out.push_back(words[w]);
    for (int i = 1; i < length; ++i) {
      w = draw_weighted(next[w], rng);
      out.push_back(words[w]);
    }
    return out;
  }
};

std::string split_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05zu", prefix, i);
  return buf;
}

std::string insert_phrase(std::vector<std::string> words, const std::string& phrase, Rng& rng) {
  const auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(words.size())));
  const auto pw = split_words(phrase);
  words.insert(words.begin() + static_cast<long>(pos), pw.begin(), pw.end());
  return join(words);
}

}  // namespace

void SynthConfig::validate() const {
  if (d_feat < 1) throw ConfigError("synth.d_feat must be >= 1");
  if (dur_min < 1 || dur_min > dur_max) throw ConfigError("synth: need 1 <= dur_min <= dur_max");
  if (noise_sigma < 0.0) throw ConfigError("synth.noise_sigma must be >= 0");
  if (syllables < 2 || syllables > kMaxSyllables) {
    throw ConfigError("synth.syllables must be in [2, " + std::to_string(kMaxSyllables) + "]");
  }
  if (function_words > syllables) throw ConfigError("synth: function_words exceeds syllables");
  if (vocab_words < 2 || function_words < 0 || function_words >= vocab_words) {
    throw ConfigError("synth: need 0 <= function_words < vocab_words");
  }
  if (rare_phrase_count < 0 || rare_train_occurrences < 0) {
    throw ConfigError("synth: rare phrase counts must be >= 0");
  }
  if (min_sentence_words < 1 || min_sentence_words > max_sentence_words) {
    throw ConfigError("synth: need 1 <= min_sentence_words <= max_sentence_words");
  }
  if (static_cast<long long>(rare_phrase_count) * rare_train_occurrences > train_utterances) {
    throw ConfigError("synth: train split too small for rare phrase occurrences");
  }
  if (bias_test_utterances > 0 && rare_phrase_count == 0) {
    throw ConfigError("synth: bias_test needs rare phrases");
  }
}

FeatureSequence gen_utterance(std::span<const int> piece_ids, const nn::Matrix& templates,
                              const SynthConfig& cfg, Rng& rng) {
  if (piece_ids.empty()) throw std::invalid_argument("gen_utterance: empty piece list");
  std::vector<int> durations;
  durations.reserve(piece_ids.size());
  Eigen::Index total = 0;
  for (const int id : piece_ids) {
    if (id < 0 || id >= templates.rows()) {
      throw std::invalid_argument("gen_utterance: piece id " + std::to_string(id) +
                                  " has no template");
    }
    durations.push_back(static_cast<int>(rng.uniform_int(cfg.dur_min, cfg.dur_max)));
    total += durations.back();
  }
  FeatureSequence seq;
  seq.frames.resize(total, templates.cols());
  Eigen::Index t = 0;
  for (std::size_t p = 0; p < piece_ids.size(); ++p) {
    for (int d = 0; d < durations[p]; ++d, ++t) {
      for (Eigen::Index c = 0; c < templates.cols(); ++c) {
        seq.frames(t, c) = templates(piece_ids[p], c) + rng.normal(0.0, cfg.noise_sigma);
      }
    }
  }
  return seq;
}

nn::Matrix gen_templates(int vocab_size, const SynthConfig& cfg, Rng& rng) {
  nn::Matrix t(vocab_size, cfg.d_feat);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-1.0, 1.0);
  }
  return t;
}

Corpus gen_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Corpus corpus;
  Rng lex = Rng::derive(seed, 1);
  const auto syllables = draw_syllables(lex, cfg.syllables);
  std::set<std::string> taken;
  for (int i = 0; i < cfg.vocab_words; ++i) {
    const bool function = i < cfg.function_words;
    std::string w = function ? unique_word(syllables, lex, 1, 1, taken)
                             : unique_word(syllables, lex, 2, 2, taken);
    if (function) corpus.function_words.push_back(w);
    corpus.common_words.push_back(std::move(w));
  }
  const PositionalSyllables positional(corpus.common_words);
  for (int i = 0; i < cfg.rare_phrase_count; ++i) {
    corpus.rare_phrases.push_back(make_phrase(positional, lex, taken));
  }
  for (int i = 0; i < cfg.distractor_pool; ++i) {
    corpus.distractor_phrases.push_back(make_phrase(positional, lex, taken));
  }
  static constexpr bias::EntityClass kClasses[] = {bias::EntityClass::kPer, bias::EntityClass::kLoc,
                                                   bias::EntityClass::kOrg, bias::EntityClass::kOther};
  for (std::size_t i = 0; i < corpus.rare_phrases.size(); ++i) {
    corpus.gazetteer.add(corpus.rare_phrases[i], kClasses[i % 4]);
  }

  Rng gram_rng = Rng::derive(seed, 2);
  Grammar grammar;
  grammar.words = corpus.common_words;
  const std::size_t n = grammar.words.size();
  std::vector<double> unigram(n);
  for (std::size_t i = 0; i < n; ++i) {
    unigram[i] = static_cast<int>(i) < cfg.function_words ? 6.0 : 1.0;
  }
  grammar.start = unigram;
  grammar.next.assign(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double u = gram_rng.uniform();
      grammar.next[a][b] = a == b ? 0.0 : unigram[b] * u * u;
    }
  }

  auto make_split = [&](const char* name, int count, std::uint64_t stream) {
    Rng rng = Rng::derive(seed, stream);
    std::vector<Utterance> out;
    for (int i = 0; i < count; ++i) {
      const auto len = static_cast<int>(rng.uniform_int(cfg.min_sentence_words, cfg.max_sentence_words));
      out.push_back({split_id(name, static_cast<std::size_t>(i)), join(grammar.sentence(len, rng))});
    }
    return out;
  };
  corpus.train = make_split("train", cfg.train_utterances, 3);
  corpus.dev = make_split("dev", cfg.dev_utterances, 4);
  corpus.general_test = make_split("general", cfg.general_test_utterances, 5);

  Rng place = Rng::derive(seed, 6);
  std::vector<std::size_t> slots(corpus.train.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  place.shuffle(slots);
  std::size_t next_slot = 0;
  for (const auto& phrase : corpus.rare_phrases) {
    for (int k = 0; k < cfg.rare_train_occurrences; ++k) {
      Utterance& u = corpus.train[slots[next_slot++]];
      u.text = insert_phrase(split_words(u.text), phrase, place);
    }
  }

  Rng bias_rng = Rng::derive(seed, 7);
  for (int i = 0; i < cfg.bias_test_utterances; ++i) {
    const auto len = static_cast<int>(
        bias_rng.uniform_int(cfg.min_sentence_words, cfg.max_sentence_words) - 1);
    const std::string& phrase =
        corpus.rare_phrases[static_cast<std::size_t>(i) % corpus.rare_phrases.size()];
    auto words = grammar.sentence(std::max(1, len), bias_rng);
    corpus.bias_test.push_back({split_id("bias", static_cast<std::size_t>(i)),
                                insert_phrase(std::move(words), phrase, bias_rng)});
    corpus.bias_test_phrases.push_back({phrase});
  }

  std::vector<std::string> lines;
  for (const auto& u : corpus.train) lines.push_back(u.text);
  corpus.frequencies = bias::FrequencyTable::from_corpus(lines);
  return corpus;
}

void write_features(std::ostream& out, const std::vector<std::string>& ids,
                    const std::vector<FeatureSequence>& feats) {
  if (ids.size() != feats.size()) throw std::invalid_argument("write_features: size mismatch");
  out << kFeatureHeader << '\n';
  io::put_le(out, static_cast<std::uint64_t>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    io::put_string(out, ids[i]);
    const nn::Matrix& f = feats[i].frames;
    io::put_le(out, static_cast<std::uint64_t>(f.rows()));
    io::put_le(out, static_cast<std::uint64_t>(f.cols()));
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) io::put_f64(out, f(r, c));
    }
  }
  if (!out) throw std::runtime_error("write_features: stream failure");
}

void read_features(std::istream& in, std::vector<std::string>& ids,
                   std::vector<FeatureSequence>& feats) {
  std::string header;
  if (!std::getline(in, header) || header != kFeatureHeader) {
    throw std::runtime_error("feature file: missing header '" + std::string(kFeatureHeader) + "'");
  }
  const auto count = io::get_le<std::uint64_t>(in);
  ids.clear();
  feats.clear();
  for (std::uint64_t i = 0; i < count; ++i) {
    ids.push_back(io::get_string(in));
    const auto rows = io::get_le<std::uint64_t>(in);
    const auto cols = io::get_le<std::uint64_t>(in);
    FeatureSequence f;
    f.frames.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < f.frames.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.frames.cols(); ++c) f.frames(r, c) = io::get_f64(in);
    }
    feats.push_back(std::move(f));
  }
}

}  // namespace cba::synth
