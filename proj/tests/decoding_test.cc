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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "tiny_model.hpp"

#include "cba/decoding/beam_search.hpp"
#include "cba/losses/losses.hpp"
#include "cba/util/errors.hpp"

using namespace cba;
using namespace cba::decoding;
using nn::Matrix;
using nn::RowVector;

namespace {

RowVector rv(std::initializer_list<double> v) {
  RowVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) r(i++) = x;
  return r;
}

BiasContext context_for(const model::CbaModel& m, const std::vector<std::vector<int>>& phrases) {
  BiasContext ctx;
  ctx.embeddings = m.bias_encode(phrases);
  ctx.pieces = phrases;
  return ctx;
}

}  // namespace

TEST_CASE("phrase selection") {
  CHECK_FALSE(select_bias_phrase(rv({0.9, 0.05, 0.05})).has_value());
  CHECK(select_bias_phrase(rv({0.1, 0.2, 0.7})) == 2);
  CHECK(select_bias_phrase(rv({0.2, 0.4, 0.4})) == 1);
  CHECK_FALSE(select_bias_phrase(rv({1.0})).has_value());
}

TEST_CASE("attention logit boost") {
  const RowVector logits = rv({0.5, -1.0, 2.0, 0.0, 1.0});
  const int pieces[] = {3, 1, 3};
  CHECK(boost_attention_logits(logits, pieces, 0.0) == logits);
  const RowVector b = boost_attention_logits(logits, pieces, 5.0);
  CHECK(b == rv({0.5, 4.0, 2.0, 5.0, 1.0}));
  const int bad[] = {5};
  CHECK_THROWS_AS(boost_attention_logits(logits, bad, 1.0), std::invalid_argument);

  std::vector<std::string> corpus(20, "han");
  for (int i = 0; i < 8; ++i) corpus.push_back("na");
  corpus.push_back("call hanna phone");
  const auto bpe = bpe::BpeModel::train(corpus, 100);
  bias::BiasList list;
  list.add("hanna", bias::PhraseOrigin::kEntity);
  const RowVector zeros = RowVector::Zero(bpe.vocab_size());
  const RowVector boosted = boost_attention_logits(zeros, 1, list, bpe, 5.0);
  for (int id = 0; id < bpe.vocab_size(); ++id) {
    const bool expected = bpe.piece(id) == "han" || bpe.piece(id) == "@@na";
    CHECK(boosted(id) == (expected ? 5.0 : 0.0));
  }
}

TEST_CASE("boosting never lowers a boosted piece") {
  Rng rng(6);
  const RowVector logits = testing::random_log_probs(1, 6, rng).row(0);
  const int pieces[] = {2, 4};
  double prev = 0.0;
  for (double s = 0.0; s <= 10.0; s += 0.5) {
    const RowVector p = nn::softmax_rows(boost_attention_logits(logits, pieces, s));
    CHECK(p(2) >= prev);
    prev = p(2);
  }
}

TEST_CASE("ctc logit boost") {
  Rng rng(7);
  const Matrix logits = testing::random_log_probs(4, 5, rng);
  const int pieces[] = {2, 3};
  CHECK(boost_ctc_logits(logits, pieces, RowVector::Constant(4, 0.25), 0.0) == logits);

  const Matrix uniform = boost_ctc_logits(logits, pieces, RowVector::Constant(4, 0.25), 5.0);
  const Matrix diff = uniform - logits;
  for (int t = 0; t < 4; ++t) {
    for (int v = 0; v < 5; ++v) {
      CHECK(diff(t, v) == doctest::Approx(v == 2 || v == 3 ? 1.25 : 0.0));
    }
  }
  const Matrix one_hot = boost_ctc_logits(logits, pieces, rv({0, 0, 1, 0}), 5.0);
  for (int t = 0; t < 4; ++t) {
    CHECK((one_hot.row(t) == logits.row(t)) == (t != 2));
  }
  CHECK_THROWS_AS(boost_ctc_logits(logits, pieces, RowVector::Constant(3, 0.3), 5.0), std::invalid_argument);
}

TEST_CASE("prefix scores against enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const int T = static_cast<int>(rng.uniform_int(1, 5));
    const int V = static_cast<int>(rng.uniform_int(2, 4));
    const Matrix lp = testing::random_log_probs(T, V, rng);
    CtcPrefixState st = ctc_initial_state(lp);
    std::vector<int> prefix;
    CHECK(std::abs(ctc_eos_score(st) - testing::brute_ctc(lp, prefix)) < 1e-9);
    for (int len = 0; len < 3; ++len) {
      const RowVector all = ctc_prefix_scores_all(st, lp);
      for (int c = 1; c < V; ++c) {
        auto ext = prefix;
        ext.push_back(c);
        const double want = testing::brute_prefix(lp, ext);
        const double got = ctc_prefix_score(st, c, lp).prefix_log;
        if (std::isinf(want)) {
          CHECK(std::isinf(got));
          CHECK(std::isinf(all(c)));
        } else {
          CHECK(std::abs(got - want) < 1e-9);
          CHECK(std::abs(all(c) - want) < 1e-9);
        }
      }
      const int c = static_cast<int>(rng.uniform_int(1, V - 1));
      st = ctc_prefix_score(st, c, lp);
      prefix.push_back(c);
      const double eos = ctc_eos_score(st);
      const double full = losses::ctc_log_likelihood(lp, prefix);
      if (std::isinf(full)) {
        CHECK(std::isinf(eos));
      } else {
        CHECK(std::abs(eos - full) < 1e-9);
      }
    }
  }
}

TEST_CASE("prefix scores with certain blanks") {
  Matrix lp = Matrix::Constant(3, 3, -std::numeric_limits<double>::infinity());
  lp.col(0).setZero();
  const auto st = ctc_initial_state(lp);
  CHECK(ctc_eos_score(st) == 0.0);
  CHECK(std::isinf(ctc_prefix_score(st, 1, lp).prefix_log));
  CHECK_THROWS_AS(ctc_prefix_score(st, 0, lp), std::invalid_argument);
}

TEST_CASE("beam search") {
  const model::CbaModel m(testing::tiny_config(), 13);
  Rng rng(14);
  const Matrix feats = nn::uniform_init(12, 4, 1, rng);
  DecodeConfig cfg;
  cfg.beam_size = 3;
  const BiasContext none;
  const BiasContext two = context_for(m, {{4, 5}, {6}});

  SUBCASE("bias-free paths agree") {
    const auto base = joint_beam_search(m, feats, none, cfg);
    DecodeConfig off = cfg;
    off.enable_bias = false;
    DecodeConfig zero = cfg;
    zero.bias_score = 0.0;
    CHECK(joint_beam_search(m, feats, two, off)[0].tokens == base[0].tokens);
    CHECK(joint_beam_search(m, feats, two, zero)[0].tokens == base[0].tokens);
    CHECK(joint_beam_search(m, feats, two, zero)[0].joint_score == base[0].joint_score);
  }
  SUBCASE("online scores match a rescore") {
    for (const BiasContext* ctx : {&none, &two}) {
      const auto hyps = joint_beam_search(m, feats, *ctx, cfg, 3);
      for (const auto& h : hyps) {
        const auto r = rescore(m, feats, h.tokens, *ctx, cfg);
        CHECK(std::abs(r.joint_score - h.joint_score) < 1e-6);
      }
    }
  }
  SUBCASE("n-best is sorted and repeatable") {
    const auto a = joint_beam_search(m, feats, two, cfg, 3);
    const auto b = joint_beam_search(m, feats, two, cfg, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].tokens == b[i].tokens);
      if (i > 0) CHECK(a[i - 1].normalized_score >= a[i].normalized_score);
    }
  }
  SUBCASE("config validation") {
    cfg.beam_size = 0;
    CHECK_THROWS_AS(joint_beam_search(m, feats, none, cfg), ConfigError);
  }
}
