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

#include "cba/bias/bias_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "cba/util/errors.hpp"
#include "cba/util/text.hpp"

namespace cba::bias {

std::string_view to_string(EntityClass c) {
  switch (c) {
    case EntityClass::kPer: return "PER";
    case EntityClass::kLoc: return "LOC";
    case EntityClass::kOrg: return "ORG";
    case EntityClass::kOther: return "OTHER";
  }
  return "OTHER";
}

EntityClass parse_entity_class(std::string_view s) {
  if (s == "PER") return EntityClass::kPer;
  if (s == "LOC") return EntityClass::kLoc;
  if (s == "ORG") return EntityClass::kOrg;
  if (s == "OTHER") return EntityClass::kOther;
  throw std::invalid_argument("unknown entity class '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- Gazetteer

void Gazetteer::add(std::string_view surface, EntityClass cls) {
  std::string form = normalize_phrase(surface);
  if (form.empty()) throw std::invalid_argument("gazetteer: empty surface form");
  if (index_.count(form) != 0) return;
  max_words_ = std::max(max_words_, split_words(form).size());
  index_[form] = cls;
  entries_.emplace_back(std::move(form), cls);
}

const EntityClass* Gazetteer::find(std::string_view phrase) const {
  auto it = index_.find(normalize_phrase(phrase));
  return it == index_.end() ? nullptr : &it->second;
}

Gazetteer Gazetteer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gazetteer " + path);
  Gazetteer g;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw std::runtime_error("gazetteer: malformed line '" + line + "'");
    g.add(fields[0], parse_entity_class(trim(fields[1])));
  }
  return g;
}

void Gazetteer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [form, cls] : entries_) out << form << '\t' << to_string(cls) << '\n';
}

std::vector<EntitySpan> annotate_entities(const std::vector<std::string>& words,
                                          const Gazetteer& gazetteer) {
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < words.size()) {
    bool matched = false;
    const std::size_t longest = std::min(gazetteer.max_words(), words.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      std::vector<std::string> cand(words.begin() + static_cast<long>(i),
                                    words.begin() + static_cast<long>(i + len));
      if (const EntityClass* cls = gazetteer.find(join(cand))) {
        spans.push_back({i, i + len - 1, *cls});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return spans;
}

// ---------------------------------------------------------------- sampling

void BiasSamplingConfig::validate() const {
  if (n_phrases_max < 1) throw ConfigError("bias.n_phrases_max must be >= 1");
  if (n_order_max < 1) throw ConfigError("bias.n_order_max must be >= 1");
  if (distractor_floor < 0) throw ConfigError("bias.distractor_floor must be >= 0");
  if (!(top_frequency_exclusion >= 0.0 && top_frequency_exclusion < 1.0)) {
    throw ConfigError("bias.top_frequency_exclusion must lie in [0, 1)");
  }
}

std::vector<std::vector<std::string>> sample_ngrams(const std::vector<std::string>& words,
                                                    const BiasSamplingConfig& cfg, Rng& rng) {
  std::vector<std::vector<std::string>> phrases;
  if (words.empty()) return phrases;
  const auto len = static_cast<std::int64_t>(words.size());
  const std::int64_t k = rng.uniform_int(1, cfg.n_phrases_max);
  std::vector<bool> used(words.size(), false);
  for (std::int64_t p = 0; p < k; ++p) {
    const std::int64_t n = std::min(rng.uniform_int(1, cfg.n_order_max), len);
    std::vector<std::int64_t> starts;
    for (std::int64_t s = 0; s + n <= len; ++s) {
      bool free = true;
      for (std::int64_t j = s; j < s + n && free; ++j) free = !used[static_cast<std::size_t>(j)];
      if (free) starts.push_back(s);
    }
    if (starts.empty()) continue;
    const std::int64_t s =
        starts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(starts.size()) - 1))];
    std::vector<std::string> phrase;
    for (std::int64_t j = s; j < s + n; ++j) {
      used[static_cast<std::size_t>(j)] = true;
      phrase.push_back(words[static_cast<std::size_t>(j)]);
    }
    phrases.push_back(std::move(phrase));
  }
  return phrases;
}

// ---------------------------------------------------------------- BiasList

int BiasList::add(std::string_view phrase, PhraseOrigin origin) {
  std::string norm = normalize_phrase(phrase);
  if (norm.empty()) throw std::invalid_argument("bias list: empty phrase");
  auto it = index_.find(norm);
  if (it != index_.end()) return it->second;
  phrases_.push_back(norm);
  origins_.push_back(origin);
  const int idx = static_cast<int>(phrases_.size());
  index_[std::move(norm)] = idx;
  return idx;
}

const std::string& BiasList::phrase(int index) const {
  if (index < 1 || index > size()) {
    throw std::invalid_argument("bias list: index " + std::to_string(index) + " outside 1.." +
                                std::to_string(size()));
  }
  return phrases_[static_cast<std::size_t>(index - 1)];
}

PhraseOrigin BiasList::origin(int index) const {
  phrase(index);
  return origins_[static_cast<std::size_t>(index - 1)];
}

int BiasList::index_of(std::string_view phrase) const {
  auto it = index_.find(normalize_phrase(phrase));
  return it == index_.end() ? 0 : it->second;
}

BiasList BiasList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bias list " + path);
  BiasList list;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) list.add(line, PhraseOrigin::kEntity);
  }
  return list;
}

void BiasList::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& p : phrases_) out << p << '\n';
}

// ---------------------------------------------------------------- frequencies

void FrequencyTable::add(std::string_view word, long long count) {
  counts_[to_lower(word)] += count;
}

long long FrequencyTable::count(std::string_view word) const {
  auto it = counts_.find(to_lower(word));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::string> FrequencyTable::ranked() const {
  std::vector<std::pair<std::string, long long>> items(counts_.begin(), counts_.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [w, n] : items) out.push_back(std::move(w));
  return out;
}

std::vector<std::string> FrequencyTable::top_band(double fraction) const {
  auto r = ranked();
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(r.size())));
  r.resize(std::min(n, r.size()));
  return r;
}

std::vector<std::string> FrequencyTable::outside_top_band(double fraction) const {
  auto r = ranked();
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(r.size())));
  return {r.begin() + static_cast<long>(std::min(n, r.size())), r.end()};
}

FrequencyTable FrequencyTable::from_corpus(const std::vector<std::string>& lines) {
  FrequencyTable t;
  for (const auto& line : lines) {
    for (const auto& w : split_words(to_lower(line))) t.add(w);
  }
  return t;
}

FrequencyTable FrequencyTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open frequency table " + path);
  FrequencyTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw std::runtime_error("frequency table: malformed line '" + line + "'");
    t.add(fields[0], std::stoll(fields[1]));
  }
  return t;
}

void FrequencyTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& w : ranked()) out << w << '\t' << counts_.at(w) << '\n';
}

// ---------------------------------------------------------------- batch lists

BatchBiasList build_batch_bias_list(const std::vector<std::string>& references,
                                    const Gazetteer& gazetteer, const BiasSamplingConfig& cfg,
                                    const FrequencyTable& frequencies, Rng& rng) {
  cfg.validate();
  if (references.empty()) throw std::invalid_argument("build_batch_bias_list: empty batch");
  BatchBiasList out;
  out.assignments.resize(references.size());
  for (std::size_t r = 0; r < references.size(); ++r) {
    const auto words = split_words(to_lower(references[r]));
    const auto entities = annotate_entities(words, gazetteer);
    std::vector<int>& assigned = out.assignments[r];
    auto assign = [&assigned](int idx) {
      if (std::find(assigned.begin(), assigned.end(), idx) == assigned.end()) assigned.push_back(idx);
    };
    if (!entities.empty()) {
      for (const auto& span : entities) {
        std::vector<std::string> phrase(words.begin() + static_cast<long>(span.first),
                                        words.begin() + static_cast<long>(span.last + 1));
        assign(out.list.add(join(phrase), PhraseOrigin::kEntity));
      }
    } else {
      for (const auto& phrase : sample_ngrams(words, cfg, rng)) {
        assign(out.list.add(join(phrase), PhraseOrigin::kNgram));
      }
    }
  }

  const int needed = cfg.distractor_floor - out.list.size();
  if (needed > 0) {
    std::vector<std::string> pool;
    for (auto& w : frequencies.outside_top_band(cfg.top_frequency_exclusion)) {
      if (out.list.index_of(w) == 0) pool.push_back(std::move(w));
    }
    if (static_cast<int>(pool.size()) < needed) {
      throw ConfigError("frequency table offers " + std::to_string(pool.size()) +
                        " eligible distractors, batch needs " + std::to_string(needed));
    }
    // Partial Fisher-Yates: the first `needed` slots become the draw.
    for (int i = 0; i < needed; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out.list.add(pool[static_cast<std::size_t>(i)], PhraseOrigin::kDistractor);
    }
  }
  return out;
}

// ---------------------------------------------------------------- labels

std::vector<std::pair<std::size_t, std::size_t>> word_piece_spans(const bpe::TokenSequence& seq) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < seq.pieces.size(); ++i) {
    if (spans.empty() || !starts_with(seq.pieces[i], bpe::kContinuation)) {
      spans.emplace_back(i, 1);
    } else {
      ++spans.back().second;
    }
  }
  return spans;
}

std::vector<int> make_bias_labels(const bpe::TokenSequence& reference,
                                  const std::vector<AssignedPhrase>& phrases) {
  std::vector<int> labels(reference.size(), 0);
  const auto spans = word_piece_spans(reference);
  std::vector<std::string> words;
  for (const auto& [first, count] : spans) {
    std::string w;
    for (std::size_t i = first; i < first + count; ++i) {
      const std::string& p = reference.pieces[i];
      w += starts_with(p, bpe::kContinuation) ? p.substr(bpe::kContinuation.size()) : p;
    }
    words.push_back(std::move(w));
  }

  struct Occurrence {
    std::size_t length;
    std::size_t start;
    int index;
  };
  std::vector<Occurrence> occurrences;
  for (const auto& ap : phrases) {
    const auto pw = split_words(to_lower(ap.phrase));
    bool found = false;
    for (std::size_t s = 0; !pw.empty() && s + pw.size() <= words.size(); ++s) {
      if (std::equal(pw.begin(), pw.end(), words.begin() + static_cast<long>(s))) {
        occurrences.push_back({pw.size(), s, ap.index});
        found = true;
      }
    }
    if (!found) {
      throw ContractError("bias phrase '" + ap.phrase + "' does not occur in reference '" +
                          join(words) + "'");
    }
  }
  std::stable_sort(occurrences.begin(), occurrences.end(), [](const auto& a, const auto& b) {
    return a.length != b.length ? a.length > b.length : a.start < b.start;
  });
  for (const auto& occ : occurrences) {
    const std::size_t first = spans[occ.start].first;
    const std::size_t last_word = occ.start + occ.length - 1;
    const std::size_t end = spans[last_word].first + spans[last_word].second;
    bool free = true;
    for (std::size_t i = first; i < end && free; ++i) free = labels[i] == 0;
    if (!free) continue;
    for (std::size_t i = first; i < end; ++i) labels[i] = occ.index;
  }
  return labels;
}

}  // namespace cba::bias
