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

#include "dynac/model.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "dynac/rng.h"

namespace dynac {

Mode ParseMode(const std::string& name) {
  if (name == "dynac") return Mode::kDynac;
  if (name == "final-only-cb") return Mode::kFinalOnlyCb;
  if (name == "plain-ctc") return Mode::kPlainCtc;
  throw ConfigError("unknown mode '" + name +
                    "' (expected dynac, final-only-cb or plain-ctc)");
}

std::string ModeName(Mode mode) {
  switch (mode) {
    case Mode::kDynac:
      return "dynac";
    case Mode::kFinalOnlyCb:
      return "final-only-cb";
    case Mode::kPlainCtc:
      return "plain-ctc";
  }
  throw ConfigError("unknown mode");
}

void ModelConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (d_in <= 0 || d <= 0 || K <= 0 || L <= 0 || ff <= 0) {
    fail("widths, K and L must be positive");
  }
  if (heads <= 0 || d % heads != 0) {
    fail("d=" + std::to_string(d) + " is not divisible by heads=" +
         std::to_string(heads));
  }
  if (bias_layers < 0 || max_phrase_tokens <= 0) {
    fail("bias encoder sizes must be non-negative");
  }
  std::set<int> seen;
  for (int l : S) {
    if (l < 1 || l > L - 1) {
      fail("self-conditioning layer " + std::to_string(l) +
           " outside 1.." + std::to_string(L - 1));
    }
    if (!seen.insert(l).second) fail("duplicate self-conditioning layer");
  }
  if (!(lambda >= 0.0 && lambda <= 0.5)) fail("lambda must lie in [0, 0.5]");
}

nlohmann::json ModelConfig::ToJson() const {
  return nlohmann::json{{"d_in", d_in},
                        {"d", d},
                        {"K", K},
                        {"L", L},
                        {"S", S},
                        {"heads", heads},
                        {"ff", ff},
                        {"bias_layers", bias_layers},
                        {"max_phrase_tokens", max_phrase_tokens},
                        {"lambda", lambda},
                        {"att_enabled", att_enabled},
                        {"seed", seed}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "d_in") c.d_in = value.get<int>();
    else if (key == "d") c.d = value.get<int>();
    else if (key == "K") c.K = value.get<int>();
    else if (key == "L") c.L = value.get<int>();
    else if (key == "S") c.S = value.get<std::vector<int>>();
    else if (key == "heads") c.heads = value.get<int>();
    else if (key == "ff") c.ff = value.get<int>();
    else if (key == "bias_layers") c.bias_layers = value.get<int>();
    else if (key == "max_phrase_tokens") c.max_phrase_tokens = value.get<int>();
    else if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "att_enabled") c.att_enabled = value.get<bool>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ConfigError("unknown model config key: " + key);
  }
  c.Validate();
  return c;
}

DynacModel::DynacModel(const ModelConfig& config) : config_(config) {
  config_.Validate();
  std::sort(config_.S.begin(), config_.S.end());
  Rng rng(config_.seed);
  const int d = config_.d;
  input_proj_ = RegisterLinear(registry_, "encoder.input", config_.d_in, d, rng);
  for (int l = 0; l < config_.L; ++l) {
    blocks_.push_back(RegisterAttentionBlock(
        registry_, "encoder.block" + std::to_string(l + 1), d, config_.ff, rng));
  }
  final_ln_gain_ = &registry_.Add("encoder.final_ln.gain", Matrix::Ones(1, d));
  final_ln_bias_ = &registry_.Add("encoder.final_ln.bias", Matrix::Zero(1, d));
  static_head_ = RegisterLinear(registry_, "score.static", d, config_.K + 1, rng);
  dyn_query_ = RegisterLinear(registry_, "score.dyn_query", d, d, rng);
  dyn_key_ = RegisterLinear(registry_, "score.dyn_key", d, d, rng);
  back_proj_ = RegisterLinear(registry_, "backproj.static", config_.K + 1, d, rng);

  const double emb_scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix tok(config_.K, d);
  for (Eigen::Index i = 0; i < tok.size(); ++i) tok.data()[i] = rng.Normal(0.0, 1.0);
  bias_token_embedding_ = &registry_.Add("bias.token_embedding", std::move(tok));
  Matrix pos(config_.max_phrase_tokens, d);
  for (Eigen::Index i = 0; i < pos.size(); ++i)
    pos.data()[i] = rng.Normal(0.0, emb_scale);
  bias_positions_ = &registry_.Add("bias.positions", std::move(pos));
  for (int l = 0; l < config_.bias_layers; ++l) {
    bias_blocks_.push_back(RegisterAttentionBlock(
        registry_, "bias.block" + std::to_string(l + 1), d, config_.ff, rng));
  }

  if (config_.att_enabled) {
    Decoder dec;
    Matrix emb(config_.K + 1, d);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = rng.Normal(0.0, 1.0);
    dec.embedding = &registry_.Add("decoder.embedding", std::move(emb));
    dec.ln_gain = &registry_.Add("decoder.ln1.gain", Matrix::Ones(1, d));
    dec.ln_bias = &registry_.Add("decoder.ln1.bias", Matrix::Zero(1, d));
    dec.query = RegisterLinear(registry_, "decoder.src_attn.query", d, d, rng);
    dec.key = RegisterLinear(registry_, "decoder.src_attn.key", d, d, rng);
    dec.value = RegisterLinear(registry_, "decoder.src_attn.value", d, d, rng);
    dec.out = RegisterLinear(registry_, "decoder.src_attn.out", d, d, rng);
    dec.ln2_gain = &registry_.Add("decoder.ln2.gain", Matrix::Ones(1, d));
    dec.ln2_bias = &registry_.Add("decoder.ln2.bias", Matrix::Zero(1, d));
    dec.ff1 = RegisterLinear(registry_, "decoder.ff1", d, config_.ff, rng);
    dec.ff2 = RegisterLinear(registry_, "decoder.ff2", config_.ff, d, rng);
    dec.ln3_gain = &registry_.Add("decoder.ln3.gain", Matrix::Ones(1, d));
    dec.ln3_bias = &registry_.Add("decoder.ln3.bias", Matrix::Zero(1, d));
    dec.static_head =
        RegisterLinear(registry_, "decoder.score.static", d, config_.K + 1, rng);
    dec.dyn_query = RegisterLinear(registry_, "decoder.score.dyn_query", d, d, rng);
    dec.dyn_key = RegisterLinear(registry_, "decoder.score.dyn_key", d, d, rng);
    decoder_ = dec;
  }
}

std::optional<Var> DynacModel::EncodeBias(Graph& g,
                                          const DynamicVocabulary& dv) const {
  if (dv.N() == 0) return std::nullopt;
  if (dv.static_size() != config_.K) {
    throw IntegrityError("bias list built for K=" +
                         std::to_string(dv.static_size()) + ", model has K=" +
                         std::to_string(config_.K));
  }
  Var table = g.Param(*bias_token_embedding_);
  Var positions = g.Param(*bias_positions_);
  std::vector<Var> rows;
  rows.reserve(dv.N());
  for (const auto& phrase : dv.phrases()) {
    const int len = static_cast<int>(phrase.tokens.size());
    if (len > config_.max_phrase_tokens) {
      throw ConfigError("bias phrase '" + phrase.surface + "' has " +
                        std::to_string(len) + " tokens, limit is " +
                        std::to_string(config_.max_phrase_tokens));
    }
    std::vector<int> pos_ids(len);
    for (int i = 0; i < len; ++i) pos_ids[i] = i;
    Var x = Add(GatherRows(table, phrase.tokens), GatherRows(positions, pos_ids));
    for (const auto& block : bias_blocks_) x = AttentionBlock(x, block, config_.heads);
    rows.push_back(MeanRows(x));
  }
  return ConcatRows(rows);
}

BiasEmbeddings DynacModel::EncodeBias(const DynamicVocabulary& dv) const {
  Graph g(false);
  auto v = EncodeBias(g, dv);
  if (!v) return Matrix(0, config_.d);
  return v->value();
}

ScoreVars DynacModel::Score(Graph& g, Var hidden,
                            std::optional<Var> bias) const {
  if (hidden.cols() != config_.d) {
    throw DimensionError("score input " + ShapeString(hidden.value()) +
                         " does not have width d=" + std::to_string(config_.d));
  }
  ScoreVars out;
  out.s_static = Linear(hidden, static_head_);
  if (bias && bias->rows() > 0) {
    if (bias->cols() != config_.d) {
      throw DimensionError("bias embeddings " + ShapeString(bias->value()) +
                           " do not have width d=" + std::to_string(config_.d));
    }
    Var q = Linear(hidden, dyn_query_);
    Var k = Linear(*bias, dyn_key_);
    out.s_dynamic = Scale(MatMulTransB(q, k),
                          1.0 / std::sqrt(static_cast<double>(config_.d)));
    out.logits = ConcatCols({out.s_static, *out.s_dynamic});
  } else {
    out.logits = out.s_static;
  }
  (void)g;
  return out;
}

Var DynacModel::BackProject(Graph& g, Var probs,
                            std::optional<Var> bias) const {
  (void)g;
  const Eigen::Index k1 = config_.K + 1;
  const Eigen::Index n = bias ? bias->rows() : 0;
  if (probs.cols() != k1 + n) {
    throw IntegrityError("probability grid has " + std::to_string(probs.cols()) +
                         " columns, expected K+1+N=" + std::to_string(k1 + n));
  }
  if (n == 0) return Linear(probs, back_proj_);
  Var z_static = SliceCols(probs, 0, k1);
  Var z_dynamic = SliceCols(probs, k1, n);
  return Add(Linear(z_static, back_proj_), MatMul(z_dynamic, *bias));
}

ForwardVars DynacModel::Forward(Graph& g, Var features, std::optional<Var> bias,
                                Mode mode) const {
  if (features.cols() != config_.d_in) {
    throw DimensionError("features " + ShapeString(features.value()) +
                         " do not have width d_in=" +
                         std::to_string(config_.d_in));
  }
  if (mode == Mode::kPlainCtc) bias.reset();
  if (bias && bias->rows() == 0) bias.reset();
  const Eigen::Index T = features.rows();
  ForwardVars out;
  Var x = Linear(features, input_proj_);
  x = Add(x, g.Constant(SinusoidalPositions(T, config_.d)));
  Var ln_gain = g.Param(*final_ln_gain_);
  Var ln_bias = g.Param(*final_ln_bias_);
  std::size_t next_cond = 0;
  for (int l = 1; l <= config_.L; ++l) {
    out.hidden.push_back(x);
    x = AttentionBlock(x, blocks_[l - 1], config_.heads);
    const bool conditioned = mode != Mode::kFinalOnlyCb &&
                             next_cond < config_.S.size() &&
                             config_.S[next_cond] == l;
    if (!conditioned) continue;
    ++next_cond;
    ScoreVars sc = Score(g, LayerNorm(x, ln_gain, ln_bias), bias);
    Var z = RowSoftmax(sc.logits);
    out.inter_layers.push_back(l);
    out.inter_scores.push_back(sc);
    out.inter_probs.push_back(z);
    x = Add(x, BackProject(g, z, bias));
  }
  out.hidden.push_back(x);
  out.final_hidden = LayerNorm(x, ln_gain, ln_bias);
  out.final_scores = Score(g, out.final_hidden, bias);
  return out;
}

ForwardOutput DynacModel::Infer(const Matrix& features,
                                const BiasEmbeddings& bias, Mode mode) const {
  Graph g(false);
  std::optional<Var> v;
  if (mode != Mode::kPlainCtc && bias.rows() > 0) v = g.Constant(bias);
  ForwardVars fv = Forward(g, g.Constant(features), v, mode);
  ForwardOutput out;
  out.inter_layers = fv.inter_layers;
  for (const Var& z : fv.inter_probs) out.inter_probs.push_back(z.value());
  out.final_scores.s_static = fv.final_scores.s_static.value();
  if (fv.final_scores.s_dynamic) {
    out.final_scores.s_dynamic = fv.final_scores.s_dynamic->value();
  } else {
    out.final_scores.s_dynamic = Matrix(features.rows(), 0);
  }
  out.final_probs = RowSoftmax(fv.final_scores.logits).value();
  return out;
}

Var DynacModel::AttentionLoss(Graph& g, Var encoder_out, std::optional<Var> bias,
                              const Transcript& y) const {
  if (!decoder_) throw ConfigError("attention decoder is disabled");
  const Decoder& dec = *decoder_;
  const int K = config_.K;
  const Eigen::Index n = bias ? bias->rows() : 0;
  const Eigen::Index len = static_cast<Eigen::Index>(y.size()) + 1;

  // Inputs are <sos> y, targets are y <eos>; <sos> and <eos> share id K.
  Matrix sel_static = Matrix::Zero(len, K + 1);
  Matrix sel_dynamic = Matrix::Zero(len, n);
  std::vector<int> targets(len);
  sel_static(0, K) = 1.0;
  for (Eigen::Index i = 0; i < len; ++i) {
    int target = i + 1 < len ? y[i] : K;
    if (target > K && target - K - 1 >= n) {
      throw IntegrityError("dangling dynamic id in decoder target");
    }
    targets[i] = target;
    if (i + 1 < len) {
      if (target < K) sel_static(i + 1, target) = 1.0;
      else sel_dynamic(i + 1, target - K - 1) = 1.0;
    }
  }
  Var emb = MatMul(g.Constant(std::move(sel_static)), g.Param(*dec.embedding));
  if (n > 0) emb = Add(emb, MatMul(g.Constant(std::move(sel_dynamic)), *bias));
  Var h = Add(emb, g.Constant(SinusoidalPositions(len, config_.d)));
  Var a = Add(h, MultiHeadCrossAttention(
                     LayerNorm(h, g.Param(*dec.ln_gain), g.Param(*dec.ln_bias)),
                     encoder_out, dec.query, dec.key, dec.value, dec.out,
                     config_.heads));
  Var f = Add(a, Linear(Gelu(Linear(LayerNorm(a, g.Param(*dec.ln2_gain),
                                              g.Param(*dec.ln2_bias)),
                                    dec.ff1)),
                        dec.ff2));
  Var o = LayerNorm(f, g.Param(*dec.ln3_gain), g.Param(*dec.ln3_bias));
  Var logits = Linear(o, dec.static_head);
  if (n > 0) {
    Var s_dyn = Scale(MatMulTransB(Linear(o, dec.dyn_query), Linear(*bias, dec.dyn_key)),
                      1.0 / std::sqrt(static_cast<double>(config_.d)));
    logits = ConcatCols({logits, s_dyn});
  }
  return Scale(PickNll(RowLogSoftmax(logits), targets),
               1.0 / static_cast<double>(len));
}

}  // namespace dynac
