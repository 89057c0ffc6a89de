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

#ifndef DYNAC_DECODE_H_
#define DYNAC_DECODE_H_

#include "dynac/ctc.h"
#include "dynac/model.h"

namespace dynac {

struct DecodeOptions {
  // Multiplier on dynamic-token probabilities of the final layer.
  double mu = 0.1;
  Mode mode = Mode::kDynac;

  void Validate() const {
    if (!(mu > 0.0)) throw ConfigError("bias weight mu must be positive");
  }
};

// Per-frame argmax after scaling columns > K by mu. Ties go to the lowest
// column. Rows are not renormalized.
AlignmentPath BiasedArgmax(const ProbGrid& z, int static_size, double mu);

// BiasedArgmax followed by Collapse.
Transcript GreedyDecode(const ProbGrid& z, int static_size,
                        const DecodeOptions& opts);

}  // namespace dynac

#endif  // DYNAC_DECODE_H_
