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

#ifndef CBA_METRICS_METRICS_HPP_
#define CBA_METRICS_METRICS_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cba::metrics {

struct EditCounts {
  long long substitutions = 0;
  long long insertions = 0;
  long long deletions = 0;
  long long reference_words = 0;

  long long errors() const { return substitutions + insertions + deletions; }
  double wer() const;
  EditCounts& operator+=(const EditCounts& o);
};

/// Word-level Levenshtein alignment with unit costs. Throws
/// std::invalid_argument on an empty reference.
EditCounts wer(std::string_view ref, std::string_view hyp);

/// True when the words of `phrase` occur contiguously in `hyp`
/// (case-insensitive).
bool contains_phrase(std::string_view hyp, std::string_view phrase);

struct RecallCounts {
  long long hits = 0;
  long long total = 0;

  double recall() const { return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total); }
};

/// Per utterance, the phrase occurrences of the reference; every
/// occurrence counts once.
RecallCounts phrase_recall(const std::vector<std::vector<std::string>>& occurrences,
                           const std::vector<std::string>& hyps);

struct EvalReport {
  EditCounts edits;
  RecallCounts recall;
  bool has_recall = false;

  /// "WER\t...", "SUB\t...", ... and "RECALL\t..." lines.
  void write(std::ostream& out) const;
};

}  // namespace cba::metrics

#endif  // CBA_METRICS_METRICS_HPP_
