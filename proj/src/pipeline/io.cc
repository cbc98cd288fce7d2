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

#include "cba/pipeline/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cba/util/text.hpp"

namespace cba::pipeline {
namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

/// Splits "a<TAB>b" at the first tab; throws with file/line context.
std::pair<std::string, std::string> split_pair(const std::string& line, const std::string& path,
                                               int lineno) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected a tab");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace

void write_transcripts(const std::string& path, const std::vector<synth::Utterance>& utts) {
  auto out = open_out(path);
  for (const auto& u : utts) out << u.id << '\t' << u.text << '\n';
}

std::vector<synth::Utterance> read_transcripts(const std::string& path) {
  auto in = open_in(path);
  std::vector<synth::Utterance> utts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto [id, text] = split_pair(line, path, lineno);
    utts.push_back({id, text});
  }
  return utts;
}

void write_assignments(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& rows) {
  auto out = open_out(path);
  for (const auto& [id, phrase] : rows) out << id << '\t' << phrase << '\n';
}

std::map<std::string, std::vector<std::string>> read_assignments(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto [id, phrase] = split_pair(line, path, lineno);
    rows[id].push_back(phrase);
  }
  return rows;
}

void write_hypotheses(const std::string& path, const std::vector<HypothesisLine>& lines) {
  auto out = open_out(path);
  for (const auto& h : lines) {
    out << h.id << '\t' << h.text << '\t' << format_fixed(h.score, 6);
    if (h.rank > 0) out << '\t' << h.rank;
    out << '\n';
  }
}

std::vector<HypothesisLine> read_hypotheses(const std::string& path) {
  auto in = open_in(path);
  std::vector<HypothesisLine> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 3) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected id, text and score columns");
    }
    HypothesisLine h;
    h.id = cols[0];
    h.text = cols[1];
    h.score = std::stod(cols[2]);
    if (cols.size() > 3) h.rank = std::stoi(cols[3]);
    lines.push_back(std::move(h));
  }
  return lines;
}

Dataset Dataset::load(const std::string& data_dir, const std::string& split_name,
                      const bpe::BpeModel& bpe) {
  Dataset d;
  d.utts = read_transcripts(join_path(data_dir, split_name + ".txt"));
  auto in = open_in(join_path(data_dir, split_name + ".feat"));
  std::vector<std::string> ids;
  synth::read_features(in, ids, d.feats);
  if (ids.size() != d.utts.size()) {
    throw std::runtime_error(split_name + ": " + std::to_string(ids.size()) + " feature records for " +
                             std::to_string(d.utts.size()) + " transcripts");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != d.utts[i].id) {
      throw std::runtime_error(split_name + ": feature id " + ids[i] + " does not match transcript " +
                               d.utts[i].id);
    }
    d.tokens.push_back(bpe.encode(d.utts[i].text));
  }
  return d;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cba::pipeline
