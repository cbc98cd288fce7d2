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

#include "cba/metrics/metrics.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "cba/util/text.hpp"

namespace cba::metrics {

double EditCounts::wer() const {
  if (reference_words == 0) throw std::invalid_argument("wer: empty reference");
  return static_cast<double>(errors()) / static_cast<double>(reference_words);
}

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  reference_words += o.reference_words;
  return *this;
}

EditCounts wer(std::string_view ref_text, std::string_view hyp_text) {
  const auto ref = split_words(to_lower(ref_text));
  const auto hyp = split_words(to_lower(hyp_text));
  if (ref.empty()) throw std::invalid_argument("wer: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  // Backtrace, preferring match/substitution, then deletion, then insertion.
  EditCounts c;
  c.reference_words = static_cast<long long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

bool contains_phrase(std::string_view hyp_text, std::string_view phrase) {
  const auto hyp = split_words(to_lower(hyp_text));
  const auto words = split_words(to_lower(phrase));
  if (words.empty()) return false;
  return std::search(hyp.begin(), hyp.end(), words.begin(), words.end()) != hyp.end();
}

RecallCounts phrase_recall(const std::vector<std::vector<std::string>>& occurrences,
                           const std::vector<std::string>& hyps) {
  if (occurrences.size() != hyps.size()) {
    throw std::invalid_argument("phrase_recall: " + std::to_string(occurrences.size()) +
                                " references for " + std::to_string(hyps.size()) + " hypotheses");
  }
  RecallCounts r;
  for (std::size_t u = 0; u < hyps.size(); ++u) {
    for (const auto& phrase : occurrences[u]) {
      ++r.total;
      if (contains_phrase(hyps[u], phrase)) ++r.hits;
    }
  }
  return r;
}

void EvalReport::write(std::ostream& out) const {
  out << "WER\t" << format_fixed(edits.wer(), 6) << '\n'
      << "SUB\t" << edits.substitutions << '\n'
      << "INS\t" << edits.insertions << '\n'
      << "DEL\t" << edits.deletions << '\n'
      << "WORDS\t" << edits.reference_words << '\n';
  if (has_recall) {
    out << "RECALL\t" << format_fixed(recall.recall(), 6) << '\n'
        << "HITS\t" << recall.hits << '\n'
        << "PHRASES\t" << recall.total << '\n';
  }
}

}  // namespace cba::metrics
