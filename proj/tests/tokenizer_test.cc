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

#include <sstream>

#include "doctest.h"

#include "cba/synth/synth_data.hpp"
#include "cba/tokenizer/bpe.hpp"
#include "cba/util/text.hpp"

using namespace cba;
using bpe::BpeModel;

namespace {

std::vector<std::string> repeat(const std::string& line, int n) {
  return std::vector<std::string>(static_cast<std::size_t>(n), line);
}

// Words seen at least twice merge fully; words seen once keep their
// cross-boundary pairs unmerged.
BpeModel toy_model() {
  std::vector<std::string> corpus = repeat("han shang", 20);
  for (const auto& l : repeat("na hai", 8)) corpus.push_back(l);
  corpus.push_back("call hanna phone");
  corpus.push_back("i will go to shanghai");
  return BpeModel::train(corpus, 200);
}

}  // namespace

TEST_CASE("most frequent pair merges first") {
  const BpeModel m = BpeModel::train({"aa aa aa"}, 6);
  REQUIRE(m.merges().size() == 1);
  CHECK(m.merges()[0] == BpeModel::Merge{"a", "a"});
  CHECK(m.encode("aa").pieces == std::vector<std::string>{"aa"});
}

TEST_CASE("target equal to the character inventory learns no merges") {
  const BpeModel m = BpeModel::train({"abc cab"}, bpe::kReservedCount + 3);
  CHECK(m.merges().empty());
  CHECK(m.encode("cab").pieces == std::vector<std::string>{"c", "@@a", "@@b"});
}

TEST_CASE("reserved ids") {
  const BpeModel m = BpeModel::train({"ab"}, 8);
  CHECK(m.piece(bpe::kBlank) == "<blank>");
  CHECK(m.id("<sos>") == bpe::kSos);
  CHECK(m.id("<eos>") == bpe::kEos);
  CHECK(m.id("<unk>") == bpe::kUnk);
}

TEST_CASE("continuation-marked pieces") {
  const BpeModel m = toy_model();
  CHECK(m.encode("hanna").pieces == std::vector<std::string>{"han", "@@na"});
  const auto seq = m.encode("I will go to shanghai");
  REQUIRE(seq.size() >= 2);
  CHECK(seq.pieces[seq.size() - 2] == "shang");
  CHECK(seq.pieces.back() == "@@hai");
  CHECK(m.encode("").empty());
  CHECK(m.encode("c").pieces == std::vector<std::string>{"c"});
}

TEST_CASE("decode joins continuation pieces") {
  const BpeModel m = toy_model();
  std::vector<int> ids;
  for (const char* p : {"c", "@@a", "@@l", "@@l", "han", "@@na", "p", "@@h", "@@o", "@@n", "@@e"}) {
    ids.push_back(m.id(p));
  }
  CHECK(m.decode(ids) == "call hanna phone");
  CHECK(m.decode(std::vector<int>{}).empty());
  CHECK_THROWS_AS(m.decode(std::vector<int>{m.vocab_size()}), std::invalid_argument);
  CHECK_THROWS_AS(m.piece(-1), std::invalid_argument);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(BpeModel::train({}, 10), std::invalid_argument);
  CHECK_THROWS_AS(BpeModel::train({"   "}, 10), std::invalid_argument);
}

TEST_CASE("round trip over random in-vocabulary sentences") {
  synth::SynthConfig cfg;
  cfg.train_utterances = 300;
  const synth::Corpus corpus = synth::gen_corpus(cfg, 17);
  std::vector<std::string> lines;
  for (const auto& u : corpus.train) lines.push_back(u.text);
  const BpeModel m = BpeModel::train(lines, 60);

  std::vector<std::string> words = corpus.common_words;
  for (const auto& p : corpus.rare_phrases) {
    for (const auto& w : split_words(p)) words.push_back(w);
  }
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> sentence;
    const auto n = rng.uniform_int(1, 8);
    for (int k = 0; k < n; ++k) {
      sentence.push_back(words[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(words.size()) - 1))]);
    }
    const std::string text = join(sentence);
    const auto seq = m.encode(text);
    for (const int id : seq.ids) REQUIRE(id != bpe::kUnk);
    REQUIRE(m.decode(seq.ids) == text);
  }
}

TEST_CASE("save and load") {
  const BpeModel m = toy_model();
  std::stringstream ss;
  m.write(ss);
  const BpeModel back = BpeModel::read(ss);
  CHECK(back.vocab_size() == m.vocab_size());
  CHECK(back.merges() == m.merges());
  CHECK(back.encode("call hanna").ids == m.encode("call hanna").ids);
}
