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

#include "dynac/decode.h"

namespace dynac {

AlignmentPath BiasedArgmax(const ProbGrid& z, int static_size, double mu) {
  if (z.cols() < static_size + 1) {
    throw DimensionError("grid " + ShapeString(z) + " narrower than K+1=" +
                         std::to_string(static_size + 1));
  }
  AlignmentPath path(z.rows());
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    int best = 0;
    double best_score = z(t, 0);
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      double s = c > static_size ? mu * z(t, c) : z(t, c);
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(c);
      }
    }
    path[t] = best;
  }
  return path;
}

Transcript GreedyDecode(const ProbGrid& z, int static_size,
                        const DecodeOptions& opts) {
  opts.Validate();
  return Collapse(BiasedArgmax(z, static_size, opts.mu), static_size);
}

}  // namespace dynac
