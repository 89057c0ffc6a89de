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

#ifndef DYNAC_CTC_H_
#define DYNAC_CTC_H_

#include <optional>
#include <vector>

#include "dynac/autodiff.h"
#include "dynac/vocab.h"

namespace dynac {

// log(0). Large and finite so that sums of sentinels never produce NaN.
inline constexpr double kLogZero = -1e30;

using AlignmentPath = std::vector<int>;

// Merges runs of equal ids, then drops blanks.
Transcript Collapse(const AlignmentPath& path, int blank);

// Minimum number of frames any alignment of `y` needs: |y| plus one blank per
// adjacent repeat.
int CtcRequiredFrames(const Transcript& y);

// Negative log-likelihood of `y` under the frame distributions in `probs`
// (T x C, column `blank` is the blank). Labels are any other column ids;
// dynamic tokens are ordinary labels here. Returns +infinity when no alignment
// exists.
double CtcNll(const Matrix& probs, const Transcript& y, int blank);

// Same recursion on log-probabilities. When `grad` is non-null and the
// reference is feasible it receives d nll / d log_probs (T x C).
double CtcNllFromLogProbs(const Matrix& log_probs, const Transcript& y,
                          int blank, Matrix* grad = nullptr);

// d nll / d probs, entries treated as independent.
Matrix CtcNllGradProbs(const Matrix& probs, const Transcript& y, int blank);

// Reference implementation for tests: enumerates all C^T alignment paths,
// keeps those collapsing to `y` and sums their probabilities. Throws
// std::length_error when C^T exceeds 10^6.
double CtcNllOracle(const Matrix& probs, const Transcript& y, int blank);

class InfeasibleAlignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1x1 differentiable CTC loss on log-probabilities. Throws
// InfeasibleAlignment if `y` cannot be aligned to the frames.
Var CtcLoss(Var log_probs, const Transcript& y, int blank);

// Mean CTC loss over intermediate grids; nullopt when there are none.
std::optional<double> IntermediateLoss(const std::vector<Matrix>& grids,
                                       const Transcript& y, int blank);

struct LossWeights {
  double ctc = 0.0;
  double inter = 0.0;
  double att = 0.0;
  // True when absent terms were dropped and the rest rescaled to sum to one.
  bool renormalized = false;
};

// Weights of lambda*ctc + lambda*inter + (1 - 2*lambda)*att restricted to the
// terms present, rescaled to sum to one. Throws ConfigError unless
// 0 < lambda <= 0.5.
LossWeights ComputeLossWeights(double lambda, bool has_inter, bool att_enabled);

struct LossBreakdown {
  double l_ctc = 0.0;
  std::optional<double> l_inter;
  std::optional<double> l_att;
  double l_total = 0.0;
  LossWeights weights;
};

LossBreakdown TotalLoss(double l_ctc, std::optional<double> l_inter,
                        std::optional<double> l_att, double lambda,
                        bool att_enabled);

}  // namespace dynac

#endif  // DYNAC_CTC_H_
