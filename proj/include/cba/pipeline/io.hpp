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

#ifndef CBA_PIPELINE_IO_HPP_
#define CBA_PIPELINE_IO_HPP_

#include <map>
#include <string>
#include <vector>

#include "cba/synth/synth_data.hpp"
#include "cba/tokenizer/bpe.hpp"

namespace cba::pipeline {

/// "id<TAB>text" per line.
void write_transcripts(const std::string& path, const std::vector<synth::Utterance>& utts);
std::vector<synth::Utterance> read_transcripts(const std::string& path);

/// "id<TAB>phrase" per phrase occurrence.
void write_assignments(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& rows);
/// id -> phrases, in file order.
std::map<std::string, std::vector<std::string>> read_assignments(const std::string& path);

struct HypothesisLine {
  std::string id;
  std::string text;
  double score = 0.0;
  /// 1-based; 0 when the file has no rank column.
  int rank = 0;
};

void write_hypotheses(const std::string& path, const std::vector<HypothesisLine>& lines);
std::vector<HypothesisLine> read_hypotheses(const std::string& path);

/// Transcripts, features and word pieces of one split.
struct Dataset {
  std::vector<synth::Utterance> utts;
  std::vector<synth::FeatureSequence> feats;
  std::vector<bpe::TokenSequence> tokens;

  std::size_t size() const { return utts.size(); }
  static Dataset load(const std::string& data_dir, const std::string& split,
                      const bpe::BpeModel& bpe);
};

std::string join_path(const std::string& dir, const std::string& name);
bool file_exists(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace cba::pipeline

#endif  // CBA_PIPELINE_IO_HPP_
