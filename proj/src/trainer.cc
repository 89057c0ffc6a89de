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

#include "dynac/trainer.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "dynac/checkpoint.h"
#include "dynac/ops.h"
#include "dynac/rng.h"

namespace dynac {

void TrainConfig::Validate() const {
  model.Validate();
  if (!(model.lambda > 0.0)) throw ConfigError("lambda must be positive for training");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
  if (bias.n_min < 0 || bias.n_min > bias.n_max) throw ConfigError("bad bias list size range");
  if (bias.span_min_words < 1 || bias.span_min_words > bias.span_max_words) {
    throw ConfigError("bad bias span range");
  }
  if (bias.positive_prob < 0.0 || bias.positive_prob > 1.0) {
    throw ConfigError("positive_prob must lie in [0, 1]");
  }
}

nlohmann::json TrainConfig::ToJson() const {
  return nlohmann::json{{"model", model.ToJson()},
                        {"mode", ModeName(mode)},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"lr", lr},
                        {"warmup_steps", warmup_steps},
                        {"clip_norm", clip_norm},
                        {"bias",
                         {{"n_min", bias.n_min},
                          {"n_max", bias.n_max},
                          {"span_min_words", bias.span_min_words},
                          {"span_max_words", bias.span_max_words},
                          {"positive_prob", bias.positive_prob}}},
                        {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "model") c.model = ModelConfig::FromJson(v);
    else if (key == "mode") c.mode = ParseMode(v.get<std::string>());
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "lr") c.lr = v.get<double>();
    else if (key == "warmup_steps") c.warmup_steps = v.get<std::int64_t>();
    else if (key == "clip_norm") c.clip_norm = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "bias") {
      for (const auto& [bk, bv] : v.items()) {
        if (bk == "n_min") c.bias.n_min = bv.get<int>();
        else if (bk == "n_max") c.bias.n_max = bv.get<int>();
        else if (bk == "span_min_words") c.bias.span_min_words = bv.get<int>();
        else if (bk == "span_max_words") c.bias.span_max_words = bv.get<int>();
        else if (bk == "positive_prob") c.bias.positive_prob = bv.get<double>();
        else throw ConfigError("unknown bias sampling key: " + bk);
      }
    } else {
      throw ConfigError("unknown training config key: " + key);
    }
  }
  return c;
}

nlohmann::json ToJson(const StepLog& s) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return nlohmann::json{{"step", s.step},
                        {"epoch", s.epoch},
                        {"lr", s.lr},
                        {"N", s.N},
                        {"l_ctc", s.loss.l_ctc},
                        {"l_inter", opt(s.loss.l_inter)},
                        {"l_att", opt(s.loss.l_att)},
                        {"l_total", s.loss.l_total},
                        {"w_ctc", s.loss.weights.ctc},
                        {"w_inter", s.loss.weights.inter},
                        {"w_att", s.loss.weights.att},
                        {"skipped", s.skipped}};
}

nlohmann::json ToJson(const EpochLog& e) {
  return nlohmann::json{{"epoch", e.epoch},
                        {"mean_ctc", e.mean_ctc},
                        {"mean_total", e.mean_total},
                        {"skipped", e.skipped},
                        {"seconds", e.seconds}};
}

BatchLoss ComputeBatchLoss(Graph& g, const DynacModel& model,
                           const std::vector<const Utterance*>& batch,
                           const DynamicVocabulary& dv, Mode mode) {
  const ModelConfig& cfg = model.config();
  const int blank = cfg.K;
  std::optional<Var> bias;
  if (mode != Mode::kPlainCtc) bias = model.EncodeBias(g, dv);

  BatchLoss out;
  std::optional<Var> sum;
  double sum_ctc = 0.0, sum_inter = 0.0, sum_att = 0.0;
  bool has_inter = false;
  long used = 0;
  for (const Utterance* u : batch) {
    Transcript y = RewriteReference(u->reference, dv);
    if (CtcRequiredFrames(y) > u->features.rows()) {
      ++out.skipped;
      continue;
    }
    ForwardVars fv = model.Forward(g, g.Constant(u->features), bias, mode);
    Var l_ctc = CtcLoss(RowLogSoftmax(fv.final_scores.logits), y, blank);
    std::optional<Var> l_inter;
    for (const ScoreVars& sc : fv.inter_scores) {
      Var l = CtcLoss(RowLogSoftmax(sc.logits), y, blank);
      l_inter = l_inter ? Add(*l_inter, l) : l;
    }
    if (l_inter) {
      l_inter = Scale(*l_inter, 1.0 / static_cast<double>(fv.inter_scores.size()));
    }
    std::optional<Var> l_att;
    if (cfg.att_enabled) l_att = model.AttentionLoss(g, fv.final_hidden, bias, y);

    LossWeights w = ComputeLossWeights(cfg.lambda, l_inter.has_value(), cfg.att_enabled);
    Var total = Scale(l_ctc, w.ctc);
    if (l_inter) total = Add(total, Scale(*l_inter, w.inter));
    if (l_att) total = Add(total, Scale(*l_att, w.att));
    sum = sum ? Add(*sum, total) : total;

    sum_ctc += l_ctc.value()(0, 0);
    if (l_inter) {
      has_inter = true;
      sum_inter += l_inter->value()(0, 0);
    }
    if (l_att) sum_att += l_att->value()(0, 0);
    ++used;
  }
  if (used == 0) return out;
  const double inv = 1.0 / static_cast<double>(used);
  out.total = Scale(*sum, inv);
  out.breakdown = TotalLoss(sum_ctc * inv,
                            has_inter ? std::optional<double>(sum_inter * inv) : std::nullopt,
                            cfg.att_enabled ? std::optional<double>(sum_att * inv) : std::nullopt,
                            cfg.lambda, cfg.att_enabled);
  return out;
}

double ClipGradients(ParameterRegistry& registry, double max_norm) {
  double sq = 0.0;
  for (const auto& p : registry.params()) {
    if (p->trainable) sq += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : registry.params()) {
      if (p->trainable) p->grad *= s;
    }
  }
  return norm;
}

nlohmann::json CheckpointMeta(const TrainConfig& cfg, const StaticVocabulary& vocab,
                              int epoch, std::int64_t step, double loss) {
  return nlohmann::json{{"model", cfg.model.ToJson()},
                        {"mode", ModeName(cfg.mode)},
                        {"train_config", cfg.ToJson()},
                        {"vocab", vocab.tokens()},
                        {"epoch", epoch},
                        {"step", step},
                        {"loss", loss}};
}

TrainResult Train(const TrainConfig& cfg, const Corpus& corpus,
                  const std::string& out_dir,
                  const std::optional<std::string>& resume,
                  const TrainHooks& hooks) {
  namespace fs = std::filesystem;
  cfg.Validate();
  if (cfg.model.K != corpus.vocab.size() || cfg.model.d_in != corpus.spec.d_in) {
    throw IntegrityError("model K/d_in do not match the corpus");
  }
  if (corpus.train.empty()) throw ConfigError("empty training corpus");
  fs::create_directories(out_dir);

  DynacModel model(cfg.model);
  Adam adam(AdamOptions{cfg.lr, cfg.warmup_steps});
  int start_epoch = 0;
  double best = std::numeric_limits<double>::infinity();
  if (resume) {
    CheckpointData ck = LoadCheckpoint(*resume);
    if (ck.meta.at("vocab").get<std::vector<std::string>>() != corpus.vocab.tokens()) {
      throw IntegrityError("checkpoint vocabulary differs from the corpus");
    }
    ApplyParameters(ck, model.registry());
    if (ck.has_optimizer) adam.Restore(ck.optimizer_step, ck.moments);
    start_epoch = ck.meta.at("epoch").get<int>();
    best = ck.meta.value("best_loss", ck.meta.at("loss").get<double>());
  }

  // Bias phrases during training come from words the model hears.
  std::set<std::string> heard;
  for (const auto& u : corpus.train) heard.insert(u.words.begin(), u.words.end());
  const std::vector<std::string> pool(heard.begin(), heard.end());

  std::ofstream log(fs::path(out_dir) / "train_log.jsonl",
                    resume ? std::ios::app : std::ios::trunc);
  TrainResult result;
  result.best_loss = best;
  std::vector<int> order(corpus.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // Per-epoch stream so that resuming replays the same batches.
    Rng rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::vector<int> perm = order;
    rng.Shuffle(perm);
    EpochLog ep;
    ep.epoch = epoch + 1;
    long batches = 0;
    for (std::size_t b = 0; b < perm.size(); b += cfg.batch_size) {
      std::vector<const Utterance*> batch;
      std::vector<Transcript> refs;
      for (std::size_t i = b; i < std::min(perm.size(), b + cfg.batch_size); ++i) {
        batch.push_back(&corpus.train[perm[i]]);
        refs.push_back(corpus.train[perm[i]].reference);
      }
      DynamicVocabulary dv(corpus.vocab, {});
      if (cfg.mode != Mode::kPlainCtc) {
        dv = SampleBiasList(refs, pool, corpus.vocab, cfg.bias, rng);
      }
      const std::int64_t step = adam.step() + 1;
      Graph g;
      BatchLoss bl;
      try {
        bl = ComputeBatchLoss(g, model, batch, dv, cfg.mode);
      } catch (const InfeasibleAlignment& e) {
        // Lengths were checked up front, so this is a collapsed distribution.
        throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                 ": " + e.what());
      }
      ep.skipped += bl.skipped;
      if (!bl.total) continue;
      if (!std::isfinite(bl.breakdown.l_total)) {
        throw std::runtime_error("non-finite loss at step " + std::to_string(step));
      }
      model.registry().ZeroGrad();
      g.Backward(*bl.total);
      ClipGradients(model.registry(), cfg.clip_norm);
      adam.Step(model.registry());

      StepLog s;
      s.step = step;
      s.epoch = epoch + 1;
      s.lr = adam.LearningRate(step);
      s.N = dv.N();
      s.loss = bl.breakdown;
      s.skipped = bl.skipped;
      log << ToJson(s).dump() << '\n';
      if (hooks.on_step) hooks.on_step(s);
      ep.mean_ctc += bl.breakdown.l_ctc;
      ep.mean_total += bl.breakdown.l_total;
      ++batches;
    }
    if (batches > 0) {
      ep.mean_ctc /= static_cast<double>(batches);
      ep.mean_total /= static_cast<double>(batches);
    }
    ep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(ep);
    log << nlohmann::json{{"epoch_summary", ToJson(ep)}}.dump() << '\n';
    log.flush();
    if (hooks.on_epoch) hooks.on_epoch(ep);

    nlohmann::json meta = CheckpointMeta(cfg, corpus.vocab, epoch + 1, adam.step(), ep.mean_total);
    if (ep.mean_total < best) {
      best = ep.mean_total;
      meta["best_loss"] = best;
      SaveCheckpoint((fs::path(out_dir) / "best.ckpt").string(), model.registry(), meta, &adam);
    }
    meta["best_loss"] = best;
    SaveCheckpoint((fs::path(out_dir) / "last.ckpt").string(), model.registry(), meta, &adam);
  }
  result.steps = adam.step();
  result.best_loss = best;
  return result;
}

}  // namespace dynac
