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

#ifndef DYNAC_MODEL_H_
#define DYNAC_MODEL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynac/autodiff.h"
#include "dynac/ops.h"
#include "dynac/vocab.h"

namespace dynac {

// dynac:          dynamic vocabulary scored and fed back after every layer in
//                 the self-conditioning set, and at the final layer.
// final-only-cb:  dynamic vocabulary at the final layer only, no feedback.
// plain-ctc:      no dynamic vocabulary; self-conditioning with static
//                 posteriors at the same layers (self-conditioned CTC).
enum class Mode { kDynac, kFinalOnlyCb, kPlainCtc };

Mode ParseMode(const std::string& name);
std::string ModeName(Mode mode);

struct ModelConfig {
  int d_in = 16;   // feature width
  int d = 64;      // hidden width
  int K = 40;      // static vocabulary size, blank excluded
  int L = 4;       // encoder blocks
  std::vector<int> S = {2};  // 1-based blocks followed by self-conditioning
  int heads = 4;
  int ff = 128;
  int bias_layers = 2;
  int max_phrase_tokens = 32;
  double lambda = 0.15;
  bool att_enabled = false;
  std::uint64_t seed = 1;

  // Throws ConfigError on any violated invariant.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// V: one d-wide row per bias phrase, in dynamic-vocabulary order.
using BiasEmbeddings = Matrix;

// Alignment scores at one layer. `s_static` has K+1 columns (static tokens,
// then blank); `s_dynamic` has N.
struct ScorePair {
  Matrix s_static;
  Matrix s_dynamic;
};

// T x (K+1+N) rows of probabilities, columns laid out as token ids.
using ProbGrid = Matrix;

struct ScoreVars {
  Var s_static;
  std::optional<Var> s_dynamic;  // absent when N = 0
  Var logits;                    // concatenation, T x (K+1+N)
};

struct ForwardVars {
  std::vector<int> inter_layers;  // 1-based, one per entry below
  std::vector<ScoreVars> inter_scores;
  std::vector<Var> inter_probs;
  std::vector<Var> hidden;  // X_in of every block plus the final X_out
  ScoreVars final_scores;
  Var final_hidden;  // layer-normed final encoder output
};

struct ForwardOutput {
  std::vector<int> inter_layers;
  std::vector<ProbGrid> inter_probs;
  ScorePair final_scores;
  ProbGrid final_probs;
};

class DynacModel {
 public:
  explicit DynacModel(const ModelConfig& config);
  DynacModel(const DynacModel&) = delete;
  DynacModel& operator=(const DynacModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterRegistry& registry() { return registry_; }
  const ParameterRegistry& registry() const { return registry_; }
  int blank_id() const { return config_.K; }

  // Bias encoder: token embedding plus learned positions, Transformer blocks,
  // mean pooling over the phrase. Returns an N x d var, or nullopt for N = 0.
  std::optional<Var> EncodeBias(Graph& g, const DynamicVocabulary& dv) const;
  BiasEmbeddings EncodeBias(const DynamicVocabulary& dv) const;

  // Scoring layer on already-normalized hidden states.
  ScoreVars Score(Graph& g, Var hidden, std::optional<Var> bias) const;
  // Linear(Z_static) + Z_dynamic * V.
  Var BackProject(Graph& g, Var probs, std::optional<Var> bias) const;

  ForwardVars Forward(Graph& g, Var features, std::optional<Var> bias,
                      Mode mode) const;

  // Pure inference. `bias` may have zero rows; it is ignored in plain-ctc.
  ForwardOutput Infer(const Matrix& features, const BiasEmbeddings& bias,
                      Mode mode) const;

  // Auxiliary cross-entropy of the attention decoder on the rewritten
  // reference, averaged over output positions. Requires att_enabled.
  Var AttentionLoss(Graph& g, Var encoder_out, std::optional<Var> bias,
                    const Transcript& y) const;

 private:
  ModelConfig config_;
  ParameterRegistry registry_;

  LinearParams input_proj_;
  std::vector<AttentionBlockParams> blocks_;
  const Parameter* final_ln_gain_ = nullptr;
  const Parameter* final_ln_bias_ = nullptr;
  LinearParams static_head_;
  LinearParams dyn_query_;
  LinearParams dyn_key_;
  LinearParams back_proj_;

  const Parameter* bias_token_embedding_ = nullptr;
  const Parameter* bias_positions_ = nullptr;
  std::vector<AttentionBlockParams> bias_blocks_;

  struct Decoder {
    const Parameter* embedding = nullptr;  // (K+1) x d, row K is sos/eos
    const Parameter* ln_gain = nullptr;
    const Parameter* ln_bias = nullptr;
    LinearParams query, key, value, out;
    const Parameter* ln2_gain = nullptr;
    const Parameter* ln2_bias = nullptr;
    LinearParams ff1, ff2;
    const Parameter* ln3_gain = nullptr;
    const Parameter* ln3_bias = nullptr;
    LinearParams static_head, dyn_query, dyn_key;
  };
  std::optional<Decoder> decoder_;
};

}  // namespace dynac

#endif  // DYNAC_MODEL_H_
