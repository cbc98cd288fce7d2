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

#include "cba/tokenizer/bpe.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cba/util/text.hpp"

namespace cba::bpe {
namespace {

const std::string kReservedPieces[kReservedCount] = {"<blank>", "<sos>", "<eos>", "<unk>"};

std::string marked(const std::string& symbol) { return std::string(kContinuation) + symbol; }

}  // namespace

BpeModel BpeModel::train(const std::vector<std::string>& corpus, int target_vocab_size,
                         int min_pair_count) {
  std::map<std::string, long long> word_counts;
  for (const auto& line : corpus) {
    for (const auto& w : split_words(to_lower(line))) ++word_counts[w];
  }
  if (word_counts.empty()) throw std::invalid_argument("bpe_train: empty corpus");

  std::set<std::string> char_set;
  std::vector<std::pair<std::vector<std::string>, long long>> words;
  for (const auto& [w, n] : word_counts) {
    auto chars = utf8_chars(w);
    char_set.insert(chars.begin(), chars.end());
    words.emplace_back(std::move(chars), n);
  }
  const int initial = kReservedCount + static_cast<int>(char_set.size());
  if (target_vocab_size < initial) {
    throw std::invalid_argument("bpe_train: target vocab " + std::to_string(target_vocab_size) +
                                " is below the initial inventory " + std::to_string(initial));
  }

  BpeModel model;
  const int merge_budget = target_vocab_size - initial;
  for (int m = 0; m < merge_budget; ++m) {
    std::map<Merge, long long> pair_counts;
    for (const auto& [symbols, n] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_counts[{symbols[i], symbols[i + 1]}] += n;
      }
    }
    // std::map iterates pairs in lexicographic order, so a strict '>' keeps
    // the smallest pair among equal counts.
    const Merge* best = nullptr;
    long long best_count = 0;
    for (const auto& [pair, n] : pair_counts) {
      if (n > best_count) {
        best = &pair;
        best_count = n;
      }
    }
    if (best == nullptr || best_count < min_pair_count) break;
    const Merge merge = *best;
    const std::string joined = merge.first + merge.second;
    model.merge_rank_[merge] = static_cast<int>(model.merges_.size());
    model.merges_.push_back(merge);
    for (auto& [symbols, n] : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == merge.first && symbols[i + 1] == merge.second) {
          next.push_back(joined);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols = std::move(next);
    }
  }
  model.build_vocab({char_set.begin(), char_set.end()});
  return model;
}

void BpeModel::build_vocab(const std::vector<std::string>& chars) {
  pieces_.clear();
  vocab_.clear();
  char_count_ = static_cast<int>(chars.size());
  for (const auto& r : kReservedPieces) {
    vocab_[r] = static_cast<int>(pieces_.size());
    pieces_.push_back(r);
  }
  auto add_symbol = [this](const std::string& s) {
    for (const std::string& form : {s, marked(s)}) {
      if (vocab_.count(form) != 0) continue;
      vocab_[form] = static_cast<int>(pieces_.size());
      pieces_.push_back(form);
    }
  };
  for (const auto& c : chars) add_symbol(c);
  for (const auto& [l, r] : merges_) add_symbol(l + r);
}

int BpeModel::symbol_count() const {
  return kReservedCount + char_count_ + static_cast<int>(merges_.size());
}

std::vector<std::string> BpeModel::segment_word(std::string_view word) const {
  std::vector<std::string> symbols = utf8_chars(word);
  while (symbols.size() > 1) {
    int best_rank = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rank_.find({symbols[i], symbols[i + 1]});
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
        best_rank = it->second;
      }
    }
    if (best_rank < 0) break;
    const Merge& m = merges_[static_cast<std::size_t>(best_rank)];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == m.first && symbols[i + 1] == m.second) {
        next.push_back(m.first + m.second);
        ++i;
      } else {
        next.push_back(symbols[i]);
      }
    }
    symbols = std::move(next);
  }
  return symbols;
}

TokenSequence BpeModel::encode(std::string_view text) const {
  TokenSequence seq;
  for (const auto& word : split_words(to_lower(text))) {
    const auto symbols = segment_word(word);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      const std::string piece = i == 0 ? symbols[i] : marked(symbols[i]);
      const int pid = id(piece);
      if (pid < 0) {
        seq.ids.push_back(kUnk);
        seq.pieces.push_back(kReservedPieces[kUnk]);
      } else {
        seq.ids.push_back(pid);
        seq.pieces.push_back(piece);
      }
    }
  }
  return seq;
}

std::string BpeModel::decode(std::span<const int> ids) const {
  std::string out;
  for (const int i : ids) {
    if (i < 0 || i >= vocab_size()) {
      throw std::invalid_argument("bpe decode: id " + std::to_string(i) + " outside vocab of " +
                                  std::to_string(vocab_size()));
    }
    if (i == kBlank || i == kSos || i == kEos) continue;
    const std::string& p = pieces_[static_cast<std::size_t>(i)];
    if (starts_with(p, kContinuation) && !out.empty()) {
      out += p.substr(kContinuation.size());
    } else {
      if (!out.empty()) out += ' ';
      out += starts_with(p, kContinuation) ? p.substr(kContinuation.size()) : p;
    }
  }
  return out;
}

int BpeModel::id(std::string_view piece) const {
  auto it = vocab_.find(std::string(piece));
  return it == vocab_.end() ? -1 : it->second;
}

const std::string& BpeModel::piece(int i) const {
  if (i < 0 || i >= vocab_size()) {
    throw std::invalid_argument("bpe piece: id " + std::to_string(i) + " out of range");
  }
  return pieces_[static_cast<std::size_t>(i)];
}

void BpeModel::write(std::ostream& out) const {
  out << kModelHeader << '\n';
  for (const auto& [l, r] : merges_) out << l << '\t' << r << '\n';
  out << "#VOCAB\n";
  for (std::size_t i = 0; i < pieces_.size(); ++i) out << pieces_[i] << '\t' << i << '\n';
}

void BpeModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

BpeModel BpeModel::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) {
    throw std::runtime_error("bpe model: missing header '" + std::string(kModelHeader) + "'");
  }
  BpeModel model;
  bool in_vocab = false;
  std::vector<std::pair<std::string, int>> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "#VOCAB") {
      in_vocab = true;
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw std::runtime_error("bpe model: malformed line '" + line + "'");
    if (in_vocab) {
      entries.emplace_back(fields[0], std::stoi(fields[1]));
    } else {
      Merge m{fields[0], fields[1]};
      if (model.merge_rank_.count(m) != 0) throw std::runtime_error("bpe model: duplicate merge");
      model.merge_rank_[m] = static_cast<int>(model.merges_.size());
      model.merges_.push_back(std::move(m));
    }
  }
  model.pieces_.assign(entries.size(), std::string());
  for (const auto& [p, i] : entries) {
    if (i < 0 || static_cast<std::size_t>(i) >= entries.size() || !model.pieces_[i].empty()) {
      throw std::runtime_error("bpe model: bad vocab id for '" + p + "'");
    }
    model.pieces_[static_cast<std::size_t>(i)] = p;
    model.vocab_[p] = i;
  }
  for (int r = 0; r < kReservedCount; ++r) {
    if (static_cast<int>(model.pieces_.size()) <= r || model.pieces_[r] != kReservedPieces[r]) {
      throw std::runtime_error("bpe model: reserved id " + std::to_string(r) + " is not " +
                               kReservedPieces[r]);
    }
  }
  for (const auto& [l, r] : model.merges_) {
    if (model.vocab_.count(l + r) == 0) throw std::runtime_error("bpe model: merge result not in vocab");
  }
  model.char_count_ = 0;
  for (std::size_t i = kReservedCount; i < model.pieces_.size(); ++i) {
    const std::string& p = model.pieces_[i];
    if (!starts_with(p, kContinuation) && utf8_chars(p).size() == 1) ++model.char_count_;
  }
  return model;
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bpe model " + path);
  return read(in);
}

}  // namespace cba::bpe
