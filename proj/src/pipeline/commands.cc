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

#include "cba/pipeline/commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cba/decoding/beam_search.hpp"
#include "cba/numeric/checkpoint.hpp"
#include "cba/util/errors.hpp"
#include "cba/util/text.hpp"

namespace cba::pipeline {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTemplateStream = 50;
constexpr std::uint64_t kFeatureStream = 60;

std::string data_file(const RunConfig& rc, const char* name) { return join_path(rc.data_dir, name); }

void require_file(const std::string& path, const std::string& what) {
  if (!file_exists(path)) throw ConfigError(what + " not found: " + path);
}

bpe::BpeModel load_bpe(const RunConfig& rc) {
  const std::string path = data_file(rc, files::kBpeModel);
  require_file(path, "tokenizer model");
  return bpe::BpeModel::load(path);
}

model::CbaModel make_model(const RunConfig& rc, const bpe::BpeModel& bpe) {
  model::ModelConfig mc = rc.model;
  mc.vocab_size = bpe.vocab_size();
  return model::CbaModel(mc, rc.model_seed());
}

const char* stage_name(Stage s) { return s == Stage::kCba ? "cba" : "baseline"; }

}  // namespace

void cmd_datagen(const RunConfig& rc, bool force) {
  if (rc.data_dir.empty()) throw ConfigError("missing config key: paths.data_dir");
  if (fs::exists(rc.data_dir) && !fs::is_empty(rc.data_dir)) {
    if (!force) {
      throw ConfigError("output directory " + rc.data_dir + " exists; pass --force to overwrite");
    }
    fs::remove_all(rc.data_dir);
  }
  fs::create_directories(rc.data_dir);

  const synth::Corpus corpus = synth::gen_corpus(rc.synth, rc.seed);
  write_transcripts(join_path(rc.data_dir, "train.txt"), corpus.train);
  const bpe::BpeModel bpe =
      cmd_tokenizer(rc, join_path(rc.data_dir, "train.txt"), data_file(rc, files::kBpeModel));

  Rng template_rng = Rng::derive(rc.seed, kTemplateStream);
  const nn::Matrix templates = synth::gen_templates(bpe.vocab_size(), rc.synth, template_rng);
  const std::vector<synth::Utterance>* splits[] = {&corpus.train, &corpus.dev, &corpus.general_test,
                                                   &corpus.bias_test};
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string name = kSplits[k];
    write_transcripts(join_path(rc.data_dir, name + ".txt"), *splits[k]);
    Rng rng = Rng::derive(rc.seed, kFeatureStream + k);
    std::vector<std::string> ids;
    std::vector<synth::FeatureSequence> feats;
    for (const auto& u : *splits[k]) {
      ids.push_back(u.id);
      feats.push_back(synth::gen_utterance(bpe.encode(u.text).ids, templates, rc.synth, rng));
    }
    std::ofstream out(join_path(rc.data_dir, name + ".feat"), std::ios::binary | std::ios::trunc);
    synth::write_features(out, ids, feats);
  }

  corpus.gazetteer.save(data_file(rc, files::kGazetteer));
  corpus.frequencies.save(data_file(rc, files::kFrequencies));
  bias::BiasList full;
  for (const auto& p : corpus.rare_phrases) full.add(p, bias::PhraseOrigin::kEntity);
  full.save(data_file(rc, files::kBiasList));
  bias::BiasList distractors;
  for (const auto& p : corpus.distractor_phrases) distractors.add(p, bias::PhraseOrigin::kDistractor);
  distractors.save(data_file(rc, files::kDistractors));
  std::vector<std::pair<std::string, std::string>> rows;
  for (std::size_t i = 0; i < corpus.bias_test.size(); ++i) {
    for (const auto& p : corpus.bias_test_phrases[i]) rows.emplace_back(corpus.bias_test[i].id, p);
  }
  write_assignments(data_file(rc, files::kBiasAssignments), rows);
}

bpe::BpeModel cmd_tokenizer(const RunConfig& rc, const std::string& input,
                            const std::string& output) {
  require_file(input, "transcripts");
  std::vector<std::string> lines;
  for (const auto& u : read_transcripts(input)) lines.push_back(u.text);
  bpe::BpeModel model = bpe::BpeModel::train(lines, rc.bpe_vocab_size, rc.bpe_min_pair_count);
  model.save(output);
  return model;
}

void cmd_bias_build(const RunConfig& rc, const std::string& refs, const std::string& list_out,
                    const std::string& assign_out) {
  require_file(refs, "references");
  require_file(data_file(rc, files::kGazetteer), "gazetteer");
  require_file(data_file(rc, files::kFrequencies), "frequency table");
  const auto utts = read_transcripts(refs);
  if (utts.empty()) throw ConfigError("references file " + refs + " is empty");
  std::vector<std::string> texts;
  for (const auto& u : utts) texts.push_back(u.text);
  const auto gaz = bias::Gazetteer::load(data_file(rc, files::kGazetteer));
  const auto freq = bias::FrequencyTable::load(data_file(rc, files::kFrequencies));
  Rng rng(rc.seed);
  const bias::BatchBiasList bb = bias::build_batch_bias_list(texts, gaz, rc.bias, freq, rng);
  bb.list.save(list_out);
  std::vector<std::pair<std::string, std::string>> rows;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    for (const int idx : bb.assignments[i]) rows.emplace_back(utts[i].id, bb.list.phrase(idx));
  }
  write_assignments(assign_out, rows);
}

void cmd_train(const RunConfig& rc, const TrainOptions& opts) {
  if (rc.exp_dir.empty()) throw ConfigError("missing config key: paths.exp_dir");
  if (opts.stage == Stage::kCba && opts.init.empty()) {
    throw ConfigError("--stage cba requires --init <baseline checkpoint>");
  }
  const bpe::BpeModel bpe = load_bpe(rc);
  for (const char* f : {files::kGazetteer, files::kFrequencies}) require_file(data_file(rc, f), f);
  fs::create_directories(rc.exp_dir);

  model::CbaModel model = make_model(rc, bpe);
  if (!opts.init.empty()) {
    require_file(opts.init, "init checkpoint");
    const nn::LoadReport report = nn::load_checkpoint(opts.init, model.params());
    if (!report.unexpected.empty()) {
      throw std::runtime_error("init checkpoint has unknown parameters, first: " +
                               report.unexpected.front());
    }
    for (const auto& name : report.missing) {
      if (!starts_with(name, model::kBiasPrefix)) {
        throw std::runtime_error("init checkpoint lacks parameter " + name);
      }
    }
  }
  const Dataset train = Dataset::load(rc.data_dir, "train", bpe);
  const auto gaz = bias::Gazetteer::load(data_file(rc, files::kGazetteer));
  const auto freq = bias::FrequencyTable::load(data_file(rc, files::kFrequencies));

  const std::string stage = stage_name(opts.stage);
  StageOptions so;
  so.stage = opts.stage;
  so.epochs = opts.epochs.value_or(opts.stage == Stage::kCba ? rc.cba_epochs : rc.baseline_epochs);
  so.checkpoint_path = opts.output.empty() ? join_path(rc.exp_dir, stage + ".ckpt") : opts.output;
  so.log_path = so.checkpoint_path + ".log";
  so.state_path = so.checkpoint_path + ".state";
  so.resume = opts.resume;
  so.progress = opts.progress;
  train_stage(model, {&train, &bpe, &gaz, &freq}, rc, so);
}

void cmd_decode(const RunConfig& rc, const DecodeOptions& opts) {
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (opts.output.empty()) throw ConfigError("--out is required");
  if (opts.split.empty() == opts.features.empty()) {
    throw ConfigError("give exactly one of --split or --features");
  }
  require_file(opts.checkpoint, "checkpoint");
  const bpe::BpeModel bpe = load_bpe(rc);
  model::CbaModel model = make_model(rc, bpe);
  nn::load_checkpoint(opts.checkpoint, model.params());

  bias::BiasList list;
  if (!opts.bias_list.empty()) {
    std::ifstream probe(opts.bias_list);
    if (!probe) throw ConfigError("cannot read bias list " + opts.bias_list);
    list = bias::BiasList::load(opts.bias_list);
  }
  decoding::DecodeConfig dc = rc.decode;
  if (opts.bias_score) dc.bias_score = *opts.bias_score;
  if (opts.no_bias) dc.enable_bias = false;
  dc.validate();
  const decoding::BiasContext bias_ctx =
      dc.enable_bias ? decoding::BiasContext::build(model, list, bpe) : decoding::BiasContext{};

  const std::string feat_path =
      opts.features.empty() ? join_path(rc.data_dir, opts.split + ".feat") : opts.features;
  require_file(feat_path, "features");
  std::vector<std::string> ids;
  std::vector<synth::FeatureSequence> feats;
  {
    std::ifstream in(feat_path, std::ios::binary);
    synth::read_features(in, ids, feats);
  }

  const int nbest = opts.nbest ? dc.beam_size : 1;
  std::vector<std::vector<decoding::NBestEntry>> results(ids.size());
  std::vector<std::string> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        results[i] = decoding::joint_beam_search(model, feats[i].frames, bias_ctx, dc, nbest);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, opts.jobs.value_or(rc.jobs));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) throw DecodeError(ids[i] + ": " + errors[i]);
  }

  std::vector<HypothesisLine> lines;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t r = 0; r < results[i].size(); ++r) {
      const auto& e = results[i][r];
      lines.push_back({ids[i], bpe.decode(e.tokens), e.normalized_score,
                       opts.nbest ? static_cast<int>(r) + 1 : 0});
    }
  }
  write_hypotheses(opts.output, lines);
}

metrics::EvalReport cmd_eval(const EvalOptions& opts) {
  require_file(opts.refs, "references");
  require_file(opts.hyps, "hypotheses");
  const auto refs = read_transcripts(opts.refs);
  std::map<std::string, std::string> best;
  for (const auto& h : read_hypotheses(opts.hyps)) {
    if (h.rank <= 1 && best.count(h.id) == 0) best[h.id] = h.text;
  }
  std::map<std::string, std::vector<std::string>> assigned;
  if (!opts.assignments.empty()) {
    require_file(opts.assignments, "bias assignments");
    assigned = read_assignments(opts.assignments);
  }

  metrics::EvalReport report;
  report.has_recall = !opts.assignments.empty();
  std::vector<std::vector<std::string>> occurrences;
  std::vector<std::string> hyps;
  std::ostringstream per_utt;
  for (const auto& r : refs) {
    const std::string hyp = best.count(r.id) != 0 ? best[r.id] : std::string();
    const metrics::EditCounts c = metrics::wer(r.text, hyp);
    report.edits += c;
    per_utt << r.id << '\t' << c.substitutions << '\t' << c.insertions << '\t' << c.deletions
            << '\t' << c.reference_words << '\n';
    auto it = assigned.find(r.id);
    occurrences.push_back(it == assigned.end() ? std::vector<std::string>{} : it->second);
    hyps.push_back(hyp);
  }
  if (report.has_recall) report.recall = metrics::phrase_recall(occurrences, hyps);
  if (!opts.output.empty()) {
    std::ofstream out(opts.output, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + opts.output + " for writing");
    report.write(out);
  }
  if (!opts.per_utterance.empty()) write_text_file(opts.per_utterance, per_utt.str());
  return report;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextual bias attention toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  bool force = false;
  std::string input, output, encode_text, refs, list_out, assign_out;
  std::string stage = "baseline";
  TrainOptions train_opts;
  int epochs = -1;
  DecodeOptions dec;
  double bias_score = -1.0;
  int jobs = 0;
  EvalOptions ev;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run configuration file")->required();
  };
  auto* datagen = app.add_subcommand("datagen", "Generate the synthetic corpus");
  add_config(datagen);
  datagen->add_flag("--force", force, "Overwrite an existing data directory");

  auto* tok = app.add_subcommand("tokenizer", "Train a tokenizer or encode text");
  add_config(tok);
  tok->add_option("--input", input, "Transcript file (default: <data_dir>/train.txt)");
  tok->add_option("--output", output, "Model file (default: <data_dir>/bpe.model)");
  tok->add_option("--encode", encode_text, "Print the pieces of TEXT with the existing model");

  auto* bb = app.add_subcommand("bias-build", "Build a bias list for a batch of references");
  add_config(bb);
  bb->add_option("--refs", refs, "Transcript file")->required();
  bb->add_option("--out", list_out, "Bias list output")->required();
  bb->add_option("--assign", assign_out, "Assignment output")->required();

  auto* train = app.add_subcommand("train", "Train a stage");
  add_config(train);
  train->add_option("--stage", stage, "baseline or cba")->check(CLI::IsMember({"baseline", "cba"}));
  train->add_option("--init", train_opts.init, "Checkpoint to start from");
  train->add_option("--out", train_opts.output, "Checkpoint to write");
  train->add_flag("--resume", train_opts.resume, "Continue from the last completed epoch");
  train->add_option("--epochs", epochs, "Override the configured epoch count");

  auto* decode = app.add_subcommand("decode", "Decode features");
  add_config(decode);
  decode->add_option("--checkpoint", dec.checkpoint)->required();
  decode->add_option("--split", dec.split, "Split name inside the data directory");
  decode->add_option("--features", dec.features, "Explicit feature file");
  decode->add_option("--out", dec.output)->required();
  decode->add_option("--bias-list", dec.bias_list, "One phrase per line");
  decode->add_option("--bias-score", bias_score, "Overrides decode.bias_score");
  decode->add_flag("--no-bias", dec.no_bias, "Disable biasing entirely");
  decode->add_flag("--nbest", dec.nbest, "Write beam_size ranked lines per utterance");
  decode->add_option("--jobs", jobs, "Parallel decoding threads");

  auto* eval = app.add_subcommand("eval", "Score hypotheses");
  eval->add_option("--refs", ev.refs)->required();
  eval->add_option("--hyps", ev.hyps)->required();
  eval->add_option("--bias-assignments", ev.assignments);
  eval->add_option("--out", ev.output);
  eval->add_option("--per-utt", ev.per_utterance);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) {
      cmd_eval(ev).write(out);
      return 0;
    }
    const ConfigFile file = ConfigFile::load(config_path);
    std::vector<std::string> required{"run.seed", "paths.data_dir"};
    if (*train || *decode) required.push_back("paths.exp_dir");
    const RunConfig rc = RunConfig::from(file, required);
    if (*datagen) {
      cmd_datagen(rc, force);
    } else if (*tok) {
      if (!encode_text.empty()) {
        const auto seq = load_bpe(rc).encode(encode_text);
        out << join(seq.pieces) << '\n';
      } else {
        cmd_tokenizer(rc, input.empty() ? join_path(rc.data_dir, "train.txt") : input,
                      output.empty() ? data_file(rc, files::kBpeModel) : output);
      }
    } else if (*bb) {
      cmd_bias_build(rc, refs, list_out, assign_out);
    } else if (*train) {
      train_opts.stage = stage == "cba" ? Stage::kCba : Stage::kBaseline;
      if (epochs >= 0) train_opts.epochs = epochs;
      train_opts.progress = &err;
      cmd_train(rc, train_opts);
    } else if (*decode) {
      if (bias_score >= 0.0) dec.bias_score = bias_score;
      if (jobs > 0) dec.jobs = jobs;
      cmd_decode(rc, dec);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace cba::pipeline
