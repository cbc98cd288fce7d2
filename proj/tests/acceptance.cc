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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   acceptance <default.conf> <work dir> [criterion numbers...]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "tiny_model.hpp"

#include "cba/decoding/beam_search.hpp"
#include "cba/losses/losses.hpp"
#include "cba/numeric/checkpoint.hpp"
#include "cba/pipeline/commands.hpp"
#include "cba/pipeline/io.hpp"
#include "cba/util/text.hpp"

namespace fs = std::filesystem;
using namespace cba;
using namespace cba::pipeline;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

void cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cba");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("cba " + join(args, " ") + " failed: " + err.str());
}

std::map<std::string, std::string> eval_report(const std::string& refs, const std::string& hyps,
                                               const std::string& assign,
                                               const std::string& out) {
  std::vector<std::string> args{"eval", "--refs", refs, "--hyps", hyps, "--out", out};
  if (!assign.empty()) {
    args.push_back("--bias-assignments");
    args.push_back(assign);
  }
  cli(args);
  std::map<std::string, std::string> fields;
  for (const auto& line : split(read_text_file(out), '\n')) {
    const auto cols = split(line, '\t');
    if (cols.size() == 2) fields[cols[0]] = cols[1];
  }
  return fields;
}

/// A run directory with its own copy of the configuration.
struct Run {
  fs::path dir;
  std::string conf;
  RunConfig rc;

  Run(const fs::path& d, const std::string& base_conf, const std::string& overrides) : dir(d) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    conf = (dir / "run.conf").string();
    write_text_file(conf, read_text_file(base_conf) + "\npaths.data_dir = " +
                              (dir / "data").string() + "\npaths.exp_dir = " +
                              (dir / "exp").string() + "\n" + overrides);
    rc = RunConfig::from(ConfigFile::load(conf), {});
  }

  std::string data(const std::string& f) const { return (dir / "data" / f).string(); }
  std::string exp(const std::string& f) const { return (dir / "exp" / f).string(); }

  void train_both() const {
    cli({"datagen", "-c", conf});
    cli({"train", "-c", conf, "--stage", "baseline"});
    cli({"train", "-c", conf, "--stage", "cba", "--init", exp("baseline.ckpt")});
  }

  void decode(const std::string& split, const std::string& out,
              std::vector<std::string> extra) const {
    std::vector<std::string> args{"decode", "-c", conf, "--checkpoint", exp("cba.ckpt"),
                                  "--split", split, "--out", out};
    args.insert(args.end(), extra.begin(), extra.end());
    cli(args);
  }
};

// ----------------------------------------------------------------- oracles

Outcome ctc_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int mismatched_inf = 0;
  for (int i = 0; i < 200; ++i) {
    const int T = static_cast<int>(rng.uniform_int(1, 6));
    const int V = static_cast<int>(rng.uniform_int(2, 4));
    const int U = static_cast<int>(rng.uniform_int(0, 3));
    std::vector<int> target;
    for (int u = 0; u < U; ++u) target.push_back(static_cast<int>(rng.uniform_int(1, V - 1)));
    const nn::Matrix lp = testing::random_log_probs(T, V, rng);
    const double want = testing::brute_ctc(lp, target);
    const double got = losses::ctc_log_likelihood(lp, target);
    if (std::isinf(want) || std::isinf(got)) {
      mismatched_inf += std::isinf(want) != std::isinf(got);
    } else {
      worst = std::max(worst, std::abs(want - got));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && mismatched_inf == 0 && secs < 10.0,
          "max abs diff " + std::to_string(worst) + ", inf mismatches " +
              std::to_string(mismatched_inf) + ", " + fmt(secs, 2) + " s"};
}

Outcome prefix_oracle() {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  int mismatched_inf = 0;
  auto compare = [&](double want, double got) {
    if (std::isinf(want) || std::isinf(got)) {
      mismatched_inf += std::isinf(want) != std::isinf(got);
    } else {
      worst = std::max(worst, std::abs(want - got));
    }
  };
  for (int i = 0; i < 100; ++i) {
    const int T = static_cast<int>(rng.uniform_int(1, 5));
    const int V = static_cast<int>(rng.uniform_int(2, 4));
    const nn::Matrix lp = testing::random_log_probs(T, V, rng);
    const int len = static_cast<int>(rng.uniform_int(0, 3));
    decoding::CtcPrefixState st = decoding::ctc_initial_state(lp);
    std::vector<int> prefix;
    for (int k = 0; k <= len; ++k) {
      const nn::RowVector all = decoding::ctc_prefix_scores_all(st, lp);
      for (int c = 1; c < V; ++c) {
        auto ext = prefix;
        ext.push_back(c);
        const double want = testing::brute_prefix(lp, ext);
        compare(want, all(c));
        compare(want, decoding::ctc_prefix_score(st, c, lp).prefix_log);
      }
      compare(testing::brute_ctc(lp, prefix), decoding::ctc_eos_score(st));
      if (k == len) break;
      const int c = static_cast<int>(rng.uniform_int(1, V - 1));
      st = decoding::ctc_prefix_score(st, c, lp);
      prefix.push_back(c);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && mismatched_inf == 0 && secs < 30.0,
          "max abs diff " + std::to_string(worst) + ", inf mismatches " +
              std::to_string(mismatched_inf) + ", " + fmt(secs, 2) + " s"};
}

Outcome gradient_integrity() {
  testing::TinyCase tc(3);
  const auto r = nn::grad_check_detailed(
      tc.model.params(), [&tc](nn::Graph& g) { return tc.loss(g); }, 1e-5);
  std::ostringstream d;
  d << "max rel error " << r.max_rel_error << " at " << r.worst_parameter << "(" << r.worst_row
    << "," << r.worst_col << "), " << tc.model.params().scalar_count() << " parameters";
  return {r.max_rel_error <= 1e-4, d.str()};
}

// ------------------------------------------------------------- trained run

Outcome bias_free_identity(const Run& run) {
  const auto bpe = bpe::BpeModel::load(run.data(files::kBpeModel));
  model::ModelConfig mc = run.rc.model;
  mc.vocab_size = bpe.vocab_size();
  model::CbaModel m(mc, run.rc.model_seed());
  nn::load_checkpoint(run.exp("cba.ckpt"), m.params());
  const Dataset ds = Dataset::load(run.rc.data_dir, "bias_test", bpe);
  const auto list = bias::BiasList::load(run.data(files::kBiasList));
  const decoding::BiasContext loaded = decoding::BiasContext::build(m, list, bpe);
  const decoding::BiasContext empty = decoding::BiasContext::build(m, bias::BiasList{}, bpe);

  decoding::DecodeConfig zero = run.rc.decode;
  zero.bias_score = 0.0;
  decoding::DecodeConfig off = run.rc.decode;
  off.enable_bias = false;
  int differing = 0;
  const std::size_t n = std::min<std::size_t>(20, ds.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = ds.feats[i].frames;
    const auto a = decoding::joint_beam_search(m, f, empty, run.rc.decode)[0].tokens;
    const auto b = decoding::joint_beam_search(m, f, loaded, zero)[0].tokens;
    const auto c = decoding::joint_beam_search(m, f, loaded, off)[0].tokens;
    differing += !(a == b && b == c);
  }
  return {n == 20 && differing == 0,
          std::to_string(n) + " utterances, " + std::to_string(differing) + " differ"};
}

Outcome recall_gap(const Run& run) {
  const std::string refs = run.data("bias_test.txt");
  const std::string assign = run.data(files::kBiasAssignments);
  run.decode("bias_test", run.exp("unbiased.hyp"), {});
  run.decode("bias_test", run.exp("biased.hyp"), {"--bias-list", run.data(files::kBiasList)});
  const double unb =
      std::stod(eval_report(refs, run.exp("unbiased.hyp"), assign, run.exp("unbiased.report"))["RECALL"]);
  const double bia =
      std::stod(eval_report(refs, run.exp("biased.hyp"), assign, run.exp("biased.report"))["RECALL"]);
  return {bia - unb >= 0.10 && unb < 0.9,
          "recall unbiased " + fmt(unb) + ", biased " + fmt(bia) + ", gap " + fmt(bia - unb)};
}

Outcome anti_bias(const Run& run) {
  const std::string refs = run.data("general_test.txt");
  run.decode("general_test", run.exp("general.hyp"), {});
  const double base =
      std::stod(eval_report(refs, run.exp("general.hyp"), "", run.exp("general.report"))["WER"]);
  const auto distractors = bias::BiasList::load(run.data(files::kDistractors));
  std::string curve = "WER empty " + fmt(base);
  bool pass = true;
  for (const int k : {10, 20, 50}) {
    if (distractors.size() < k) throw std::runtime_error("distractor file too short");
    bias::BiasList list;
    for (int i = 1; i <= k; ++i) list.add(distractors.phrase(i), bias::PhraseOrigin::kDistractor);
    const std::string path = run.exp("distractors" + std::to_string(k) + ".bias");
    list.save(path);
    const std::string hyp = run.exp("general_d" + std::to_string(k) + ".hyp");
    run.decode("general_test", hyp, {"--bias-list", path});
    const double wer = std::stod(
        eval_report(refs, hyp, "", run.exp("general_d" + std::to_string(k) + ".report"))["WER"]);
    curve += ", " + std::to_string(k) + ": " + fmt(wer);
    // A relative bound on a zero baseline only admits zero.
    if (k == 50) pass = wer <= base * 1.10 + 1e-12;
  }
  return {pass, curve};
}

// ------------------------------------------------------------ bias corpus

Outcome label_fidelity(const Run& run) {
  const auto bpe = bpe::BpeModel::load(run.data(files::kBpeModel));
  const Dataset train = Dataset::load(run.rc.data_dir, "train", bpe);
  const auto gaz = bias::Gazetteer::load(run.data(files::kGazetteer));
  const auto freq = bias::FrequencyTable::load(run.data(files::kFrequencies));
  Rng rng(707);
  long long violations = 0, labelled = 0;
  const std::size_t batch = static_cast<std::size_t>(run.rc.train.batch_size);
  for (std::size_t start = 0; start < train.size(); start += batch) {
    const std::size_t end = std::min(train.size(), start + batch);
    std::vector<std::string> refs;
    for (std::size_t i = start; i < end; ++i) refs.push_back(train.utts[i].text);
    const auto bb = bias::build_batch_bias_list(refs, gaz, run.rc.bias, freq, rng);
    for (std::size_t i = start; i < end; ++i) {
      const auto& seq = train.tokens[i];
      std::vector<bias::AssignedPhrase> assigned;
      for (const int idx : bb.assignments[i - start]) assigned.push_back({idx, bb.list.phrase(idx)});
      const auto labels = bias::make_bias_labels(seq, assigned);
      if (labels.size() != seq.size()) {
        ++violations;
        continue;
      }
      // A maximal run of one nonzero label holds one or more back-to-back
      // occurrences of its phrase; each must spell the phrase.
      for (std::size_t t = 0; t < labels.size();) {
        if (labels[t] == 0) {
          ++t;
          continue;
        }
        std::size_t e = t;
        while (e < labels.size() && labels[e] == labels[t]) ++e;
        const std::string& phrase = bb.list.phrase(labels[t]);
        const std::size_t n = bpe.encode(phrase).ids.size();
        if (n == 0 || (e - t) % n != 0) {
          ++labelled;
          ++violations;
        }
        for (std::size_t o = t; n > 0 && (e - t) % n == 0 && o < e; o += n) {
          const std::vector<int> ids(seq.ids.begin() + static_cast<long>(o),
                                     seq.ids.begin() + static_cast<long>(o + n));
          ++labelled;
          if (bpe.decode(ids) != phrase) ++violations;
        }
        t = e;
      }
    }
  }
  return {violations == 0 && labelled > 0,
          std::to_string(train.size()) + " references, " + std::to_string(labelled) +
              " labelled occurrences, " + std::to_string(violations) + " violations"};
}

Outcome distractor_policy(const Run& run) {
  const auto gaz = bias::Gazetteer::load(run.data(files::kGazetteer));
  const auto freq = bias::FrequencyTable::load(run.data(files::kFrequencies));
  const auto train = read_transcripts(run.data("train.txt"));
  const auto top_list = freq.top_band(run.rc.bias.top_frequency_exclusion);
  const std::set<std::string> top(top_list.begin(), top_list.end());
  bias::BiasSamplingConfig cfg = run.rc.bias;
  cfg.distractor_floor = 20;
  Rng rng(808);
  int violations = 0, smallest = 1 << 30;
  for (int b = 0; b < 100; ++b) {
    std::vector<std::string> refs;
    for (int i = 0; i < run.rc.train.batch_size; ++i) {
      refs.push_back(train[static_cast<std::size_t>(
                               rng.uniform_int(0, static_cast<std::int64_t>(train.size()) - 1))]
                         .text);
    }
    const auto bb = bias::build_batch_bias_list(refs, gaz, cfg, freq, rng);
    smallest = std::min(smallest, bb.list.size());
    if (bb.list.size() < 20) ++violations;
    for (int i = 1; i <= bb.list.size(); ++i) {
      if (bb.list.origin(i) == bias::PhraseOrigin::kDistractor && top.count(bb.list.phrase(i)) != 0) {
        ++violations;
      }
    }
  }
  return {violations == 0, "smallest list " + std::to_string(smallest) + ", " +
                               std::to_string(violations) + " violations"};
}

// ------------------------------------------------------------ determinism

Outcome determinism(const std::string& base_conf, const fs::path& work) {
  // A reduced corpus keeps two complete runs affordable.
  const std::string reduced =
      "synth.train_utterances = 200\nsynth.dev_utterances = 20\n"
      "synth.general_test_utterances = 20\nsynth.bias_test_utterances = 20\n"
      "train.baseline_epochs = 2\ntrain.cba_epochs = 2\n";
  std::vector<fs::path> dirs;
  for (const char* name : {"det_a", "det_b"}) {
    Run run(work / name, base_conf, reduced);
    run.train_both();
    run.decode("bias_test", run.exp("biased.hyp"), {"--bias-list", run.data(files::kBiasList)});
    eval_report(run.data("bias_test.txt"), run.exp("biased.hyp"),
                run.data(files::kBiasAssignments), run.exp("biased.report"));
    dirs.push_back(run.dir);
  }
  int compared = 0, differing = 0;
  for (const char* sub : {"data", "exp"}) {
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0] / sub)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), dirs[0]);
      ++compared;
      if (!fs::exists(dirs[1] / rel) ||
          read_text_file(entry.path().string()) != read_text_file((dirs[1] / rel).string())) {
        ++differing;
      }
    }
  }
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <default.conf> <work dir> [criteria...]\n";
    return 2;
  }
  const std::string base_conf = argv[1];
  const fs::path work = argv[2];
  std::set<int> wanted;
  for (int i = 3; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
  auto want = [&](int k) { return wanted.empty() || wanted.count(k) != 0; };

  int failures = 0;
  auto report = [&](int k, const std::string& name, const std::function<Outcome()>& fn) {
    if (!want(k)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << k << "] " << name << ": " << o.detail
              << std::endl;
  };

  report(1, "CTC oracle equivalence", ctc_oracle);
  report(2, "CTC prefix-score oracle", prefix_oracle);
  report(3, "gradient integrity", gradient_integrity);

  std::optional<Run> main_run;
  double pipeline_secs = 0.0;
  if (want(4) || want(5) || want(6) || want(7) || want(8)) {
    const auto t0 = Clock::now();
    try {
      main_run.emplace(work / "default", base_conf, "");
      if (want(4) || want(5) || want(6)) {
        main_run->train_both();
      } else {
        cli({"datagen", "-c", main_run->conf});
      }
    } catch (const std::exception& e) {
      std::cerr << "default pipeline failed: " << e.what() << '\n';
      main_run.reset();
    }
    pipeline_secs = seconds_since(t0);
  }
  auto with_run = [&](std::function<Outcome(const Run&)> fn) {
    return [&main_run, fn]() -> Outcome {
      if (!main_run) return {false, "default pipeline did not complete"};
      return fn(*main_run);
    };
  };

  report(4, "bias-free identity", with_run(bias_free_identity));
  report(5, "recall gap on the default corpus", with_run([&](const Run& r) {
           // Decoding and scoring count towards the pipeline time.
           const auto t0 = Clock::now();
           Outcome o = recall_gap(r);
           const double total = pipeline_secs + seconds_since(t0);
           o.pass = o.pass && total <= 1800.0;
           o.detail += ", pipeline " + fmt(total, 0) + " s";
           return o;
         }));
  report(6, "anti-bias robustness", with_run(anti_bias));
  report(7, "bias-label fidelity", with_run(label_fidelity));
  report(8, "distractor policy", with_run(distractor_policy));
  report(9, "determinism", [&] { return determinism(base_conf, work); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
