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

#include "dynac/evaluate.h"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dynac/checkpoint.h"

#ifndef DYNAC_BUILD_ID
#define DYNAC_BUILD_ID "unknown"
#endif

namespace dynac {

LoadedModel LoadModel(const std::string& checkpoint, const StaticVocabulary* vocab) {
  CheckpointData ck = LoadCheckpoint(checkpoint);
  LoadedModel lm;
  lm.meta = ck.meta;
  lm.vocab_tokens = ck.meta.at("vocab").get<std::vector<std::string>>();
  if (vocab && vocab->tokens() != lm.vocab_tokens) {
    throw IntegrityError("checkpoint vocabulary differs from the corpus vocabulary");
  }
  lm.trained_mode = ParseMode(ck.meta.at("mode").get<std::string>());
  lm.model = std::make_unique<DynacModel>(ModelConfig::FromJson(ck.meta.at("model")));
  ApplyParameters(ck, lm.model->registry());
  return lm;
}

EvalReport Evaluate(const DynacModel& model, const std::vector<Utterance>& utts,
                    const StaticVocabulary& vocab, const DynamicVocabulary& dv,
                    const DecodeOptions& opts, std::vector<Hypothesis>* hyps) {
  opts.Validate();
  if (utts.empty()) throw std::invalid_argument("empty evaluation corpus");
  const BiasEmbeddings bias = model.EncodeBias(dv);
  std::vector<WordSeq> refs, outs;
  for (const auto& u : utts) {
    ForwardOutput fo = model.Infer(u.features, bias, opts.mode);
    Transcript t = GreedyDecode(fo.final_probs, model.config().K, opts);
    WordSeq words = ExpandTranscript(t, vocab, dv);
    refs.push_back(u.words);
    outs.push_back(words);
    if (hyps) hyps->push_back({u.id, std::move(t), std::move(words)});
  }
  return WerSplit(refs, outs, dv.BiasWords());
}

double MeasureRtf(const DynacModel& model, const std::vector<Utterance>& utts,
                  const BiasEmbeddings& bias, const DecodeOptions& opts,
                  double frame_period, int repeats) {
  opts.Validate();
  if (utts.empty()) throw std::invalid_argument("empty corpus for RTF");
  if (!(frame_period > 0.0) || repeats < 1) {
    throw std::invalid_argument("bad frame period or repeat count");
  }
  double frames = 0.0;
  std::size_t sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) {
    for (const auto& u : utts) {
      ForwardOutput fo = model.Infer(u.features, bias, opts.mode);
      sink += GreedyDecode(fo.final_probs, model.config().K, opts).size();
      frames += static_cast<double>(u.features.rows());
    }
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  volatile std::size_t keep = sink;
  (void)keep;
  return wall / (frames * frame_period);
}

nlohmann::json DumpScores(const DynacModel& model, const Utterance& utt,
                          const StaticVocabulary& vocab,
                          const DynamicVocabulary& dv, Mode mode,
                          double frame_period) {
  const int K = model.config().K;
  const BiasEmbeddings bias = model.EncodeBias(dv);
  ForwardOutput fo = model.Infer(utt.features, bias, mode);
  const Matrix& ss = fo.final_scores.s_static;
  const Matrix& sd = fo.final_scores.s_dynamic;
  const Eigen::Index T = ss.rows();
  auto column = [&](const Matrix& m, Eigen::Index c) {
    std::vector<double> v(T);
    for (Eigen::Index t = 0; t < T; ++t) v[t] = m(t, c);
    return v;
  };
  nlohmann::json j;
  j["utterance"] = utt.id;
  j["mode"] = ModeName(mode);
  j["frame_period"] = frame_period;
  j["frames"] = T;
  std::vector<double> time(T);
  for (Eigen::Index t = 0; t < T; ++t) time[t] = static_cast<double>(t) * frame_period;
  j["time"] = time;
  j["blank"] = column(ss, K);
  j["static"] = nlohmann::json::array();
  std::set<int> done;
  for (int id : utt.reference) {
    if (!done.insert(id).second) continue;
    j["static"].push_back({{"id", id}, {"token", vocab.Token(id)}, {"scores", column(ss, id)}});
  }
  j["dynamic"] = nlohmann::json::array();
  for (Eigen::Index n = 0; n < sd.cols(); ++n) {
    j["dynamic"].push_back({{"id", dv.DynamicId(static_cast<int>(n))},
                            {"phrase", dv.phrases()[n].surface},
                            {"scores", column(sd, n)}});
  }
  return j;
}

std::vector<std::string> EvalBiasList(const Corpus& corpus, int n, int targets) {
  if (n < 0) throw ConfigError("bias list size must be non-negative");
  std::vector<std::string> out;
  const int t = targets < 0 ? static_cast<int>(corpus.unseen_words.size())
                            : std::min<int>(targets, corpus.unseen_words.size());
  for (int i = 0; i < t && static_cast<int>(out.size()) < n; ++i) {
    out.push_back(corpus.unseen_words[i]);
  }
  for (std::size_t i = 0; i < corpus.distractors.size() && static_cast<int>(out.size()) < n; ++i) {
    out.push_back(corpus.distractors[i]);
  }
  if (static_cast<int>(out.size()) < n) {
    throw ConfigError("not enough unseen words and distractors for N=" + std::to_string(n));
  }
  return out;
}

std::string BuildId() { return DYNAC_BUILD_ID; }

void WriteRunManifest(const std::string& dir, const std::string& command,
                      const nlohmann::json& config, std::uint64_t seed,
                      const std::vector<std::string>& outputs,
                      double wall_seconds) {
  std::filesystem::create_directories(dir);
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json m{{"command", command},
                   {"config", config},
                   {"build", BuildId()},
                   {"seed", seed},
                   {"outputs", outputs},
                   {"finished_utc", stamp},
                   {"wall_seconds", wall_seconds}};
  std::ofstream os(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest in " + dir);
  os << m.dump(2) << '\n';
}

nlohmann::json ToJson(const std::vector<Hypothesis>& hyps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& h : hyps) arr.push_back({{"id", h.id}, {"tokens", h.tokens}, {"words", h.words}});
  return arr;
}

}  // namespace dynac
