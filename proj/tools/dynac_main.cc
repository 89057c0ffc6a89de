// Copyright (c) 2026 DYNAC contributors
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

// Command-line front end: gen, train, eval, bench, dump-scores.
// Exit codes: 0 ok, 1 runtime error, 2 usage or configuration error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynac/corpus_io.h"
#include "dynac/evaluate.h"
#include "dynac/synthdata.h"
#include "dynac/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json ReadJsonFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  return json::parse(is);
}

void WriteJsonFile(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

double Since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Common {
  std::string config;
  std::string corpus;
  std::string out;
  std::string checkpoint;
  std::vector<std::string> bias_lists;
  std::vector<int> bias_sizes;
  int bias_targets = -1;
  std::vector<double> mus;
  std::string mode;
  std::optional<std::uint64_t> seed;
};

// Bias lists named on the command line, plus lists built from the corpus for
// every requested size. Built lists are written next to the report.
std::vector<std::pair<std::string, std::vector<std::string>>> CollectBiasLists(
    const Common& c, const dynac::Corpus& corpus) {
  std::vector<std::pair<std::string, std::vector<std::string>>> lists;
  for (const auto& path : c.bias_lists) {
    if (!fs::exists(path)) throw UsageError("missing bias list " + path);
    lists.emplace_back(fs::path(path).stem().string(), dynac::LoadBiasListFile(path));
  }
  for (int n : c.bias_sizes) {
    auto phrases = dynac::EvalBiasList(corpus, n, c.bias_targets);
    std::string tag = "N" + std::to_string(n);
    dynac::SaveBiasListFile((fs::path(c.out) / ("bias_" + tag + ".txt")).string(), phrases);
    lists.emplace_back(tag, std::move(phrases));
  }
  if (lists.empty()) lists.emplace_back("N0", std::vector<std::string>{});
  return lists;
}

int CmdGen(const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  if (!fs::exists(c.config)) throw UsageError("missing corpus spec " + c.config);
  dynac::CorpusSpec spec = dynac::CorpusSpec::FromJson(ReadJsonFile(c.config));
  if (c.seed) spec.seed = *c.seed;
  dynac::Corpus corpus = dynac::Generate(spec);
  dynac::SaveCorpus(corpus, c.out);
  json summary{{"train", corpus.train.size()},
               {"test", corpus.test.size()},
               {"unseen_words", corpus.unseen_words.size()},
               {"distractors", corpus.distractors.size()}};
  dynac::WriteRunManifest(c.out, "gen", spec.ToJson(), spec.seed,
                          {"spec.json", "vocab.txt", "words.txt", "unseen.txt",
                           "distractors.txt", "train/", "test/"},
                          Since(t0));
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int CmdTrain(const Common& c, const std::string& resume, int epochs) {
  auto t0 = std::chrono::steady_clock::now();
  if (!fs::exists(c.config)) throw UsageError("missing training config " + c.config);
  json cj = ReadJsonFile(c.config);
  dynac::Corpus corpus = dynac::LoadCorpus(c.corpus);
  // K and d_in follow the corpus unless the config pins them.
  json& mj = cj["model"];
  if (!mj.contains("K")) mj["K"] = corpus.spec.K;
  if (!mj.contains("d_in")) mj["d_in"] = corpus.spec.d_in;
  dynac::TrainConfig cfg = dynac::TrainConfig::FromJson(cj);
  if (!c.mode.empty()) cfg.mode = dynac::ParseMode(c.mode);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.model.seed = *c.seed;
  }
  if (epochs >= 0) cfg.epochs = epochs;
  cfg.Validate();
  dynac::TrainHooks hooks;
  hooks.on_epoch = [](const dynac::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " ctc " << e.mean_ctc << " total "
              << e.mean_total << " (" << e.seconds << " s)\n";
  };
  std::optional<std::string> res;
  if (!resume.empty()) res = resume;
  dynac::TrainResult r = dynac::Train(cfg, corpus, c.out, res, hooks);
  json summary{{"steps", r.steps}, {"best_loss", r.best_loss}, {"epochs", json::array()}};
  for (const auto& e : r.epochs) summary["epochs"].push_back(dynac::ToJson(e));
  dynac::WriteRunManifest(c.out, "train", cfg.ToJson(), cfg.seed,
                          {"best.ckpt", "last.ckpt", "train_log.jsonl"}, Since(t0));
  std::cout << summary.dump(2) << '\n';
  return 0;
}

dynac::Mode ResolveMode(const Common& c, const dynac::LoadedModel& lm) {
  return c.mode.empty() ? lm.trained_mode : dynac::ParseMode(c.mode);
}

int CmdEval(const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(c.out);
  dynac::Corpus corpus = dynac::LoadCorpus(c.corpus);
  dynac::LoadedModel lm = dynac::LoadModel(c.checkpoint, &corpus.vocab);
  const dynac::Mode mode = ResolveMode(c, lm);
  std::vector<double> mus = c.mus.empty() ? std::vector<double>{0.1} : c.mus;
  auto lists = CollectBiasLists(c, corpus);

  std::vector<std::string> inventory = corpus.inventory;
  inventory.insert(inventory.end(), corpus.distractors.begin(), corpus.distractors.end());
  auto train_counts = dynac::OccurrenceHistogram(corpus.train, inventory);
  const std::vector<std::pair<long, long>> edges = {{0, 0}, {1, 10}, {11, 100}, {101, -1}};

  json reports = json::array();
  std::vector<std::string> outputs{"report.json"};
  for (const auto& [tag, phrases] : lists) {
    auto dv = dynac::DynamicVocabulary::FromSurfaces(corpus.vocab, phrases);
    for (double mu : mus) {
      dynac::DecodeOptions opts{mu, mode};
      std::vector<dynac::Hypothesis> hyps;
      dynac::EvalReport rep = dynac::Evaluate(*lm.model, corpus.test, corpus.vocab, dv, opts, &hyps);
      json j = rep.ToJson();
      j["bias_list"] = tag;
      j["N"] = dv.N();
      j["mu"] = mu;
      j["mode"] = dynac::ModeName(mode);
      j["occurrence_bins"] = dynac::ToJson(dynac::BinByOccurrence(rep, train_counts, edges));
      reports.push_back(j);
      std::string hyp_name = "hyp_" + tag + "_mu" + std::to_string(mu) + ".txt";
      std::ofstream hs(fs::path(c.out) / hyp_name, std::ios::trunc);
      for (const auto& h : hyps) {
        hs << h.id;
        for (const auto& w : h.words) hs << ' ' << w;
        hs << '\n';
      }
      outputs.push_back(hyp_name);
    }
  }
  WriteJsonFile(fs::path(c.out) / "report.json", reports);
  json config{{"checkpoint", c.checkpoint},
              {"corpus", c.corpus},
              {"mode", dynac::ModeName(mode)},
              {"mu", mus},
              {"bias_lists", c.bias_lists},
              {"bias_sizes", c.bias_sizes},
              {"bias_targets", c.bias_targets}};
  dynac::WriteRunManifest(c.out, "eval", config, 0, outputs, Since(t0));
  std::cout << reports.dump(2) << '\n';
  return 0;
}

int CmdBench(const Common& c, int repeats) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(c.out);
  dynac::Corpus corpus = dynac::LoadCorpus(c.corpus);
  dynac::LoadedModel lm = dynac::LoadModel(c.checkpoint, &corpus.vocab);
  const dynac::Mode mode = ResolveMode(c, lm);
  const double mu = c.mus.empty() ? 0.1 : c.mus.front();
  json results = json::array();
  for (const auto& [tag, phrases] : CollectBiasLists(c, corpus)) {
    auto dv = dynac::DynamicVocabulary::FromSurfaces(corpus.vocab, phrases);
    dynac::BiasEmbeddings bias = lm.model->EncodeBias(dv);
    double rtf = dynac::MeasureRtf(*lm.model, corpus.test, bias, {mu, mode},
                                   dynac::kDefaultFramePeriod, repeats);
    results.push_back({{"bias_list", tag}, {"N", dv.N()}, {"mode", dynac::ModeName(mode)},
                       {"rtf", rtf}, {"frame_period", dynac::kDefaultFramePeriod},
                       {"repeats", repeats}});
  }
  WriteJsonFile(fs::path(c.out) / "rtf.json", results);
  json config{{"checkpoint", c.checkpoint}, {"corpus", c.corpus},
              {"mode", dynac::ModeName(mode)}, {"repeats", repeats},
              {"bias_lists", c.bias_lists}, {"bias_sizes", c.bias_sizes}};
  dynac::WriteRunManifest(c.out, "bench", config, 0, {"rtf.json"}, Since(t0));
  std::cout << results.dump(2) << '\n';
  return 0;
}

int CmdDump(const Common& c, const std::string& utt_id) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(c.out);
  dynac::Corpus corpus = dynac::LoadCorpus(c.corpus);
  dynac::LoadedModel lm = dynac::LoadModel(c.checkpoint, &corpus.vocab);
  const dynac::Mode mode = ResolveMode(c, lm);
  const dynac::Utterance* utt = nullptr;
  for (const auto* split : {&corpus.test, &corpus.train}) {
    for (const auto& u : *split) {
      if (u.id == utt_id) utt = &u;
    }
  }
  if (!utt) throw UsageError("no utterance " + utt_id);
  auto lists = CollectBiasLists(c, corpus);
  if (lists.size() != 1) throw UsageError("dump-scores takes exactly one bias list");
  auto dv = dynac::DynamicVocabulary::FromSurfaces(corpus.vocab, lists.front().second);
  json trace = dynac::DumpScores(*lm.model, *utt, corpus.vocab, dv, mode);
  std::string name = "scores_" + utt_id + ".json";
  WriteJsonFile(fs::path(c.out) / name, trace);
  json config{{"checkpoint", c.checkpoint}, {"corpus", c.corpus}, {"utterance", utt_id},
              {"mode", dynac::ModeName(mode)}, {"bias_lists", c.bias_lists},
              {"bias_sizes", c.bias_sizes}};
  dynac::WriteRunManifest(c.out, "dump-scores", config, 0, {name}, Since(t0));
  std::cout << json{{"trace", name}, {"frames", trace["frames"]}}.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual biasing with a dynamic CTC vocabulary"};
  app.require_subcommand(1);
  Common c;
  std::string resume, utt;
  int epochs = -1, repeats = 3;

  auto add_mode = [&](CLI::App* s) {
    s->add_option("--mode", c.mode, "dynac | final-only-cb | plain-ctc")
        ->check(CLI::IsMember({"dynac", "final-only-cb", "plain-ctc"}));
  };
  auto add_bias = [&](CLI::App* s) {
    s->add_option("--bias-list", c.bias_lists, "bias phrase file (repeatable)");
    s->add_option("--bias-n", c.bias_sizes,
                  "build a list of N phrases from unseen words and distractors (repeatable)");
    s->add_option("--bias-targets", c.bias_targets,
                  "unseen words in built lists (default: all that fit)");
  };

  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--config", c.config, "corpus spec JSON")->required();
  gen->add_option("--out", c.out, "corpus directory")->required();
  gen->add_option("--seed", c.seed, "override the spec seed");

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", c.config, "training config JSON")->required();
  train->add_option("--corpus", c.corpus, "corpus directory")->required();
  train->add_option("--out", c.out, "output directory")->required();
  train->add_option("--seed", c.seed, "override config seeds");
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--epochs", epochs, "override the epoch count");
  add_mode(train);

  auto* eval = app.add_subcommand("eval", "decode the test split and score it");
  eval->add_option("--checkpoint", c.checkpoint, "model checkpoint")->required();
  eval->add_option("--corpus", c.corpus, "corpus directory")->required();
  eval->add_option("--out", c.out, "output directory")->required();
  eval->add_option("--mu", c.mus, "bias weight (repeatable)");
  add_mode(eval);
  add_bias(eval);

  auto* bench = app.add_subcommand("bench", "real-time factor of forward + greedy decode");
  bench->add_option("--checkpoint", c.checkpoint, "model checkpoint")->required();
  bench->add_option("--corpus", c.corpus, "corpus directory")->required();
  bench->add_option("--out", c.out, "output directory")->required();
  bench->add_option("--mu", c.mus, "bias weight");
  bench->add_option("--repeats", repeats, "passes over the test split");
  add_mode(bench);
  add_bias(bench);

  auto* dump = app.add_subcommand("dump-scores", "final-layer token scores of one utterance");
  dump->add_option("--checkpoint", c.checkpoint, "model checkpoint")->required();
  dump->add_option("--corpus", c.corpus, "corpus directory")->required();
  dump->add_option("--out", c.out, "output directory")->required();
  dump->add_option("--utt", utt, "utterance id")->required();
  add_mode(dump);
  add_bias(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return CmdGen(c);
    if (*train) return CmdTrain(c, resume, epochs);
    if (*eval) return CmdEval(c);
    if (*bench) return CmdBench(c, repeats);
    if (*dump) return CmdDump(c, utt);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const dynac::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
