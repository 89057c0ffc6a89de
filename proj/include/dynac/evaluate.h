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

#ifndef DYNAC_EVALUATE_H_
#define DYNAC_EVALUATE_H_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynac/decode.h"
#include "dynac/metrics.h"
#include "dynac/model.h"
#include "dynac/synthdata.h"

namespace dynac {

// Nominal duration of one encoder frame, used for RTF.
inline constexpr double kDefaultFramePeriod = 0.04;

struct LoadedModel {
  std::unique_ptr<DynacModel> model;
  Mode trained_mode = Mode::kDynac;
  std::vector<std::string> vocab_tokens;
  nlohmann::json meta;
};

// Rebuilds a model from a checkpoint. Throws IntegrityError if `vocab` is
// given and differs from the vocabulary the model was trained with.
LoadedModel LoadModel(const std::string& checkpoint,
                      const StaticVocabulary* vocab = nullptr);

struct Hypothesis {
  std::string id;
  Transcript tokens;
  WordSeq words;
};

// Greedy decoding of every utterance followed by the bias-split WER. The
// bias word set is dv.BiasWords().
EvalReport Evaluate(const DynacModel& model, const std::vector<Utterance>& utts,
                    const StaticVocabulary& vocab, const DynamicVocabulary& dv,
                    const DecodeOptions& opts,
                    std::vector<Hypothesis>* hyps = nullptr);

// Wall time of forward + greedy decode over nominal audio duration, with
// `bias` encoded beforehand. Single-threaded. Throws std::invalid_argument
// on an empty corpus.
double MeasureRtf(const DynacModel& model, const std::vector<Utterance>& utts,
                  const BiasEmbeddings& bias, const DecodeOptions& opts,
                  double frame_period = kDefaultFramePeriod, int repeats = 1);

// Token-wise final-layer scores of one utterance:
//   {"utterance", "mode", "frame_period", "frames",
//    "time": [T], "blank": [T],
//    "static": [{"id", "token", "scores": [T]}],   reference tokens
//    "dynamic": [{"id", "phrase", "scores": [T]}]} one per bias phrase
// The dynamic section is empty in plain-ctc mode.
nlohmann::json DumpScores(const DynacModel& model, const Utterance& utt,
                          const StaticVocabulary& vocab,
                          const DynamicVocabulary& dv, Mode mode,
                          double frame_period = kDefaultFramePeriod);

// Evaluation bias list: the first `targets` unseen words (all when negative)
// followed by distractors until the list holds `n` phrases.
std::vector<std::string> EvalBiasList(const Corpus& corpus, int n, int targets = -1);

std::string BuildId();

// Writes <dir>/manifest.json.
void WriteRunManifest(const std::string& dir, const std::string& command,
                      const nlohmann::json& config, std::uint64_t seed,
                      const std::vector<std::string>& outputs,
                      double wall_seconds);

nlohmann::json ToJson(const std::vector<Hypothesis>& hyps);

}  // namespace dynac

#endif  // DYNAC_EVALUATE_H_
