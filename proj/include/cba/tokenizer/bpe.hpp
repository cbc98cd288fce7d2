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

// Byte-pair-encoding word pieces. Every piece after the first one of a
// word carries the "@@" prefix, so "hanna" may become ["han", "@@na"].
//
// Merges are learned on unmarked symbols inside words. The symbol
// inventory (reserved ids + characters + merges) is bounded by the target
// vocabulary size; each learned symbol then receives two ids, one for the
// word-initial form and one for the "@@" continuation form.

#ifndef CBA_TOKENIZER_BPE_HPP_
#define CBA_TOKENIZER_BPE_HPP_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cba::bpe {

inline constexpr int kBlank = 0;
inline constexpr int kSos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kReservedCount = 4;
inline constexpr std::string_view kContinuation = "@@";
inline constexpr std::string_view kModelHeader = "CBA-BPE v1";

struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::string> pieces;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

class BpeModel {
 public:
  using Merge = std::pair<std::string, std::string>;

  /// Learns merges by repeatedly joining the most frequent adjacent pair,
  /// ties broken by lexicographic pair order. Pairs seen fewer than
  /// `min_pair_count` times are never merged.
  static BpeModel train(const std::vector<std::string>& corpus, int target_vocab_size,
                        int min_pair_count = 2);

  static BpeModel read(std::istream& in);
  static BpeModel load(const std::string& path);
  void write(std::ostream& out) const;
  void save(const std::string& path) const;

  TokenSequence encode(std::string_view text) const;
  /// Pieces of one (already lowercased) word, unmarked.
  std::vector<std::string> segment_word(std::string_view word) const;
  std::string decode(std::span<const int> ids) const;

  int vocab_size() const { return static_cast<int>(pieces_.size()); }
  /// Reserved ids + characters + merges.
  int symbol_count() const;
  const std::vector<Merge>& merges() const { return merges_; }
  /// -1 when absent.
  int id(std::string_view piece) const;
  const std::string& piece(int id) const;

 private:
  void build_vocab(const std::vector<std::string>& chars);

  std::vector<Merge> merges_;
  std::map<Merge, int> merge_rank_;
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> vocab_;
  int char_count_ = 0;
};

}  // namespace cba::bpe

#endif  // CBA_TOKENIZER_BPE_HPP_
