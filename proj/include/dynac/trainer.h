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

#ifndef DYNAC_TRAINER_H_
#define DYNAC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynac/ctc.h"
#include "dynac/model.h"
#include "dynac/optimizer.h"
#include "dynac/synthdata.h"

namespace dynac {

struct TrainConfig {
  ModelConfig model;
  Mode mode = Mode::kDynac;
  int epochs = 30;
  int batch_size = 16;
  double lr = 2e-3;
  std::int64_t warmup_steps = 500;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 5.0;
  BiasSamplingOptions bias;
  std::uint64_t seed = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys throw ConfigError. Missing keys keep their defaults.
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  int N = 0;
  LossBreakdown loss;  // averaged over the batch
  long skipped = 0;    // infeasible utterances in the batch
};

struct EpochLog {
  int epoch = 0;
  double mean_ctc = 0.0;
  double mean_total = 0.0;
  long skipped = 0;
  double seconds = 0.0;
};

struct TrainResult {
  std::int64_t steps = 0;
  std::vector<EpochLog> epochs;
  double best_loss = 0.0;
};

nlohmann::json ToJson(const StepLog& s);
nlohmann::json ToJson(const EpochLog& e);

// Loss of one batch on a shared graph: the bias list is encoded once and
// every reference is rewritten against it. Infeasible utterances are left out
// and counted. Returns the batch-mean loss var, or nullopt if all were
// infeasible.
struct BatchLoss {
  std::optional<Var> total;
  LossBreakdown breakdown;
  long skipped = 0;
};
BatchLoss ComputeBatchLoss(Graph& g, const DynacModel& model,
                           const std::vector<const Utterance*>& batch,
                           const DynamicVocabulary& dv, Mode mode);

// Scales every gradient so that the global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGradients(ParameterRegistry& registry, double max_norm);

// Checkpoint metadata: model config, mode, vocabulary, training progress.
nlohmann::json CheckpointMeta(const TrainConfig& cfg, const StaticVocabulary& vocab,
                              int epoch, std::int64_t step, double loss);

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(const EpochLog&)> on_epoch;
};

// Trains on corpus.train and writes last.ckpt, best.ckpt (lowest epoch-mean
// total loss) and train_log.jsonl into `out_dir`. With `resume` the model,
// optimizer and epoch counter continue from that checkpoint. Throws
// std::runtime_error naming the step on a non-finite loss.
TrainResult Train(const TrainConfig& cfg, const Corpus& corpus,
                  const std::string& out_dir,
                  const std::optional<std::string>& resume = std::nullopt,
                  const TrainHooks& hooks = {});

}  // namespace dynac

#endif  // DYNAC_TRAINER_H_
