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

#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "cba/pipeline/commands.hpp"
#include "cba/pipeline/io.hpp"
#include "cba/util/text.hpp"

using namespace cba;
using namespace cba::pipeline;
namespace fs = std::filesystem;

namespace {

struct Cli {
  int code = 0;
  std::string out;
  std::string err;
};

Cli run(std::vector<std::string> args) {
  args.insert(args.begin(), "cba");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Cli r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// A scratch directory with a tiny run configuration.
struct Workspace {
  fs::path root;
  std::string conf;

  explicit Workspace(const std::string& name, const std::string& extra = "") {
    root = fs::temp_directory_path() / ("cba_cli_test_" + name);
    fs::remove_all(root);
    fs::create_directories(root);
    conf = (root / "run.conf").string();
    write_text_file(conf, "run.seed = 7\n"
                          "paths.data_dir = " + (root / "data").string() + "\n"
                          "paths.exp_dir = " + (root / "exp").string() + "\n"
                          "synth.train_utterances = 40\n"
                          "synth.dev_utterances = 4\n"
                          "synth.general_test_utterances = 4\n"
                          "synth.bias_test_utterances = 4\n"
                          "synth.rare_phrase_count = 6\n"
                          "synth.max_sentence_words = 5\n"
                          "tokenizer.vocab_size = 48\n"
                          "model.d_model = 16\n"
                          "model.num_encoder_layers = 1\n"
                          "model.num_decoder_layers = 1\n"
                          "model.d_ff = 16\n"
                          "model.bias_embed_dim = 8\n"
                          "model.bias_lstm_hidden = 8\n"
                          "train.baseline_epochs = 1\n"
                          "train.cba_epochs = 1\n"
                          "decode.beam_size = 2\n" + extra);
  }
  ~Workspace() { fs::remove_all(root); }

  std::string path(const std::string& rel) const { return (root / rel).string(); }
};

std::vector<std::string> lines_of(const std::string& path) {
  std::vector<std::string> out;
  for (auto& l : split(read_text_file(path), '\n')) {
    if (!l.empty()) out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "-c", "/nonexistent/run.conf"}).code == 2);

  Workspace ws("usage");
  write_text_file(ws.conf, "paths.data_dir = x\n");
  const Cli missing = run({"datagen", "-c", ws.conf});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("run.seed") != std::string::npos);

  write_text_file(ws.conf, "run.seed = 1\npaths.data_dir = x\nmodel.colour = 3\n");
  const Cli unknown = run({"datagen", "-c", ws.conf});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("model.colour") != std::string::npos);
}

TEST_CASE("eval of identical files") {
  Workspace ws("eval");
  write_text_file(ws.path("refs.txt"), "u1\tcall hanna phone\nu2\tgo home\n");
  write_text_file(ws.path("hyps.txt"), "u1\tcall hanna phone\t-1.0\nu2\tgo home\t-2.0\n");
  write_text_file(ws.path("assign.txt"), "u1\thanna\n");
  const Cli r = run({"eval", "--refs", ws.path("refs.txt"), "--hyps", ws.path("hyps.txt"),
                     "--bias-assignments", ws.path("assign.txt")});
  CHECK(r.code == 0);
  CHECK(r.out.find("WER\t0.000000") != std::string::npos);
  CHECK(r.out.find("RECALL\t1.000000") != std::string::npos);

  const Cli missing = run({"eval", "--refs", ws.path("refs.txt"), "--hyps", ws.path("none.txt")});
  CHECK(missing.code == 2);
}

TEST_CASE("tiny pipeline") {
  Workspace ws("pipeline");
  REQUIRE(run({"datagen", "-c", ws.conf}).code == 0);
  CHECK(run({"datagen", "-c", ws.conf}).code == 2);
  for (const char* f : {"train.txt", "train.feat", "bias_test.txt", "bpe.model", "gazetteer.tsv",
                        "freq.tsv", "bias_test.bias", "bias_test.assign", "distractors.txt"}) {
    CHECK(fs::exists(ws.path(std::string("data/") + f)));
  }

  const Cli pieces = run({"tokenizer", "-c", ws.conf, "--encode", "ga"});
  CHECK(pieces.code == 0);
  CHECK(!pieces.out.empty());

  REQUIRE(run({"train", "-c", ws.conf, "--stage", "baseline", "--epochs", "2"}).code == 0);
  for (const auto& line : lines_of(ws.path("exp/baseline.ckpt.log"))) {
    CHECK(split(line, '\t').at(3) == "0.000000");
  }

  SUBCASE("resume continues the same run") {
    REQUIRE(run({"train", "-c", ws.conf, "--stage", "baseline", "--epochs", "1", "--out",
                 ws.path("exp/part.ckpt")}).code == 0);
    REQUIRE(run({"train", "-c", ws.conf, "--stage", "baseline", "--epochs", "2", "--out",
                 ws.path("exp/part.ckpt"), "--resume"}).code == 0);
    CHECK(read_text_file(ws.path("exp/part.ckpt")) == read_text_file(ws.path("exp/baseline.ckpt")));
    CHECK(read_text_file(ws.path("exp/part.ckpt.log")) ==
          read_text_file(ws.path("exp/baseline.ckpt.log")));
  }

  SUBCASE("cba stage and decoding") {
    CHECK(run({"train", "-c", ws.conf, "--stage", "cba"}).code == 2);
    REQUIRE(run({"train", "-c", ws.conf, "--stage", "cba", "--init",
                 ws.path("exp/baseline.ckpt")}).code == 0);
    const auto cba_log = lines_of(ws.path("exp/cba.ckpt.log"));
    REQUIRE(!cba_log.empty());
    CHECK(split(cba_log[0], '\t').at(3) != "0.000000");

    const std::string ckpt = ws.path("exp/cba.ckpt");
    const std::string list = ws.path("data/bias_test.bias");
    auto decode = [&](const std::string& out, std::vector<std::string> extra) {
      std::vector<std::string> args{"decode", "-c", ws.conf, "--checkpoint", ckpt,
                                    "--split", "bias_test", "--out", ws.path(out)};
      args.insert(args.end(), extra.begin(), extra.end());
      return run(args).code;
    };
    REQUIRE(decode("plain.hyp", {}) == 0);
    REQUIRE(decode("zero.hyp", {"--bias-list", list, "--bias-score", "0"}) == 0);
    REQUIRE(decode("off.hyp", {"--bias-list", list, "--no-bias"}) == 0);
    CHECK(read_text_file(ws.path("zero.hyp")) == read_text_file(ws.path("plain.hyp")));
    CHECK(read_text_file(ws.path("off.hyp")) == read_text_file(ws.path("plain.hyp")));

    REQUIRE(decode("nbest.hyp", {"--bias-list", list, "--nbest"}) == 0);
    const auto nbest = lines_of(ws.path("nbest.hyp"));
    CHECK(nbest.size() <= 2 * 4);
    CHECK(split(nbest[0], '\t').size() == 4);

    std::string big;
    const auto rare = lines_of(list);
    for (int i = 0; i < 2000; ++i) {
      big += rare[static_cast<std::size_t>(i) % rare.size()] + " " +
             rare[static_cast<std::size_t>(i / 7) % rare.size()] + "\n";
    }
    write_text_file(ws.path("big.bias"), big);
    CHECK(decode("big.hyp", {"--bias-list", ws.path("big.bias")}) == 0);
    CHECK(decode("bad.hyp", {"--bias-list", ws.path("missing.bias")}) == 2);

    const Cli ev = run({"eval", "--refs", ws.path("data/bias_test.txt"), "--hyps",
                        ws.path("plain.hyp"), "--bias-assignments",
                        ws.path("data/bias_test.assign")});
    CHECK(ev.code == 0);
    for (const auto& line : split(ev.out, '\n')) {
      if (line.empty()) continue;
      const auto cols = split(line, '\t');
      REQUIRE(cols.size() == 2);
      CHECK(std::isfinite(std::stod(cols[1])));
    }
  }

  SUBCASE("incompatible init checkpoint") {
    Workspace other("wide", "model.d_model = 32\n");
    fs::copy(ws.path("data"), other.path("data"), fs::copy_options::recursive);
    const Cli r = run({"train", "-c", other.conf, "--stage", "cba", "--init",
                       ws.path("exp/baseline.ckpt")});
    CHECK(r.code != 0);
    CHECK(r.err.find("decoder.embed") != std::string::npos);
  }
}
