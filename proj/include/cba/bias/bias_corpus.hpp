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

// Training-time bias lists: entity phrases from a gazetteer tagger, random
// word n-grams for references without entities, and low-frequency single
// word distractors until a floor is reached. Plus the per-piece bias
// labels (0 = no bias) that supervise the bias attention.

#ifndef CBA_BIAS_BIAS_CORPUS_HPP_
#define CBA_BIAS_BIAS_CORPUS_HPP_

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cba/tokenizer/bpe.hpp"
#include "cba/util/rng.hpp"

namespace cba::bias {

enum class EntityClass { kPer, kLoc, kOrg, kOther };

std::string_view to_string(EntityClass c);
EntityClass parse_entity_class(std::string_view s);

/// Entity surface forms; lookups are case-insensitive.
class Gazetteer {
 public:
  void add(std::string_view surface, EntityClass cls);
  /// Class of an exact (normalized) word sequence, if listed.
  const EntityClass* find(std::string_view phrase) const;
  std::size_t max_words() const { return max_words_; }
  std::size_t size() const { return entries_.size(); }
  /// Entries in insertion order.
  const std::vector<std::pair<std::string, EntityClass>>& entries() const { return entries_; }

  static Gazetteer load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, EntityClass>> entries_;
  std::unordered_map<std::string, EntityClass> index_;
  std::size_t max_words_ = 0;
};

/// Inclusive word-index span.
struct EntitySpan {
  std::size_t first = 0;
  std::size_t last = 0;
  EntityClass cls = EntityClass::kOther;

  bool operator==(const EntitySpan&) const = default;
};

/// Longest-match, non-overlapping, left-to-right greedy tagging.
std::vector<EntitySpan> annotate_entities(const std::vector<std::string>& words,
                                          const Gazetteer& gazetteer);

struct BiasSamplingConfig {
  int n_phrases_max = 2;
  int n_order_max = 3;
  int distractor_floor = 20;
  double top_frequency_exclusion = 0.2;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// k ~ U{1..n_phrases_max} non-overlapping n-grams, n ~ U{1..n_order_max}
/// clipped to the reference. Phrases that no longer fit are dropped.
std::vector<std::vector<std::string>> sample_ngrams(const std::vector<std::string>& words,
                                                    const BiasSamplingConfig& cfg, Rng& rng);

enum class PhraseOrigin { kEntity, kNgram, kDistractor };

/// Phrases indexed from 1; index 0 is the implicit no-bias slot.
class BiasList {
 public:
  /// Returns the index of the (normalized) phrase, inserting it if new.
  int add(std::string_view phrase, PhraseOrigin origin);
  /// 1-based lookup.
  const std::string& phrase(int index) const;
  PhraseOrigin origin(int index) const;
  /// 0 when absent.
  int index_of(std::string_view phrase) const;
  int size() const { return static_cast<int>(phrases_.size()); }
  bool empty() const { return phrases_.empty(); }
  const std::vector<std::string>& phrases() const { return phrases_; }

  /// One phrase per line, blank lines ignored.
  static BiasList load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<std::string> phrases_;
  std::vector<PhraseOrigin> origins_;
  std::unordered_map<std::string, int> index_;
};

class FrequencyTable {
 public:
  void add(std::string_view word, long long count = 1);
  long long count(std::string_view word) const;
  std::size_t size() const { return counts_.size(); }
  /// Words by descending count, ties by ascending word.
  std::vector<std::string> ranked() const;
  /// The ceil(fraction * size) most frequent words.
  std::vector<std::string> top_band(double fraction) const;
  /// Everything outside the top band, in rank order.
  std::vector<std::string> outside_top_band(double fraction) const;

  static FrequencyTable from_corpus(const std::vector<std::string>& lines);
  static FrequencyTable load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::map<std::string, long long> counts_;
};

struct BatchBiasList {
  BiasList list;
  /// For each reference, the bias-list indices of the phrases it contains.
  std::vector<std::vector<int>> assignments;
};

BatchBiasList build_batch_bias_list(const std::vector<std::string>& references,
                                    const Gazetteer& gazetteer, const BiasSamplingConfig& cfg,
                                    const FrequencyTable& frequencies, Rng& rng);

struct AssignedPhrase {
  int index = 0;
  std::string phrase;
};

/// One label per word piece of `reference`: the bias-list index of the
/// phrase occurrence covering it, else 0. Overlapping occurrences are
/// resolved longest phrase first, then leftmost. Throws ContractError when
/// an assigned phrase does not occur in the reference.
std::vector<int> make_bias_labels(const bpe::TokenSequence& reference,
                                  const std::vector<AssignedPhrase>& phrases);

/// Splits a marked piece sequence into words: (first piece, piece count).
std::vector<std::pair<std::size_t, std::size_t>> word_piece_spans(const bpe::TokenSequence& seq);

}  // namespace cba::bias

#endif  // CBA_BIAS_BIAS_CORPUS_HPP_
