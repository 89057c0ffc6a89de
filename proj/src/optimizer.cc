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

#include "dynac/optimizer.h"

#include <algorithm>
#include <cmath>

namespace dynac {

double Adam::LearningRate(std::int64_t step) const {
  if (opts_.warmup_steps <= 0) return opts_.lr;
  double frac = static_cast<double>(step) /
                static_cast<double>(opts_.warmup_steps);
  return opts_.lr * std::min(1.0, frac);
}

void Adam::Step(ParameterRegistry& registry) {
  for (const auto& p : registry.params()) {
    if (p->trainable && !p->grad.allFinite()) throw NonFiniteGradient(p->name);
  }
  ++step_;
  const double lr = LearningRate(step_);
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
  for (const auto& p : registry.params()) {
    if (!p->trainable) continue;
    auto it = state_.find(p->name);
    if (it == state_.end()) {
      Moments fresh{Matrix::Zero(p->value.rows(), p->value.cols()),
                    Matrix::Zero(p->value.rows(), p->value.cols())};
      it = state_.emplace(p->name, std::move(fresh)).first;
    }
    Moments& s = it->second;
    s.m = opts_.beta1 * s.m + (1.0 - opts_.beta1) * p->grad;
    s.v = opts_.beta2 * s.v + (1.0 - opts_.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (s.m.array() / bc1) /
                        ((s.v.array() / bc2).sqrt() + opts_.eps);
  }
}

}  // namespace dynac
