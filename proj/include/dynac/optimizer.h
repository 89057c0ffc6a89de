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

#ifndef DYNAC_OPTIMIZER_H_
#define DYNAC_OPTIMIZER_H_

#include <cstdint>
#include <map>
#include <string>

#include "dynac/autodiff.h"

namespace dynac {

struct AdamOptions {
  double lr = 2e-3;
  std::int64_t warmup_steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter " + param),
        param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

// Adam with a linear warmup: lr(s) = lr * min(1, s / warmup) for s >= 1.
class Adam {
 public:
  explicit Adam(AdamOptions opts) : opts_(opts) {}

  // Applies one update from Parameter::grad of every trainable parameter and
  // advances the step count. Throws NonFiniteGradient before touching any
  // parameter if a gradient holds NaN or Inf.
  void Step(ParameterRegistry& registry);

  // Learning rate used for update number `step` (1-based).
  double LearningRate(std::int64_t step) const;

  std::int64_t step() const { return step_; }
  const AdamOptions& options() const { return opts_; }

  struct Moments {
    Matrix m;
    Matrix v;
  };
  const std::map<std::string, Moments>& state() const { return state_; }
  void Restore(std::int64_t step, std::map<std::string, Moments> state) {
    step_ = step;
    state_ = std::move(state);
  }

 private:
  AdamOptions opts_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace dynac

#endif  // DYNAC_OPTIMIZER_H_
