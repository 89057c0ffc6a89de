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

#ifndef DYNAC_OPS_H_
#define DYNAC_OPS_H_

#include <string>
#include <vector>

#include "dynac/autodiff.h"

namespace dynac {

// Differentiable primitives. Every op records its backward closure on the
// graph that owns its first argument.

Var MatMul(Var a, Var b);
// a * b^T
Var MatMulTransB(Var a, Var b);
Var Add(Var a, Var b);
// x + bias, bias is 1 x cols and broadcast over rows.
Var AddRowBroadcast(Var x, Var bias);
Var Scale(Var x, double s);
Var RowSoftmax(Var x);
Var RowLogSoftmax(Var x);
Var Gelu(Var x);
Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);
Var ConcatCols(const std::vector<Var>& parts);
Var ConcatRows(const std::vector<Var>& parts);
Var SliceCols(Var x, Eigen::Index begin, Eigen::Index count);
// 1 x cols mean over rows.
Var MeanRows(Var x);
// 1x1 sum of all entries.
Var Sum(Var x);
// Rows `ids` of `table`, in order; gradients scatter-add back.
Var GatherRows(Var table, const std::vector<int>& ids);

struct LinearParams {
  const Parameter* weight = nullptr;  // in x out
  const Parameter* bias = nullptr;    // 1 x out
};

Var Linear(Var x, const LinearParams& p);

// Negative log-likelihood of integer targets under row log-probabilities;
// returns the 1x1 sum over rows.
Var PickNll(Var log_probs, const std::vector<int>& targets);

struct AttentionBlockParams {
  const Parameter* ln1_gain = nullptr;
  const Parameter* ln1_bias = nullptr;
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams out;
  const Parameter* ln2_gain = nullptr;
  const Parameter* ln2_bias = nullptr;
  LinearParams ff1;
  LinearParams ff2;
};

// Multi-head attention of `queries` over `memory`.
Var MultiHeadCrossAttention(Var queries, Var memory, const LinearParams& query,
                            const LinearParams& key, const LinearParams& value,
                            const LinearParams& out, int heads);

// Multi-head self-attention. When `weights_out` is non-null it receives one
// T x T attention matrix per head.
Var MultiHeadAttention(Var x, const LinearParams& query, const LinearParams& key,
                       const LinearParams& value, const LinearParams& out,
                       int heads, std::vector<Matrix>* weights_out = nullptr);

// Pre-norm Transformer block:
//   x = x + MHA(LN(x)),  x = x + FF(LN(x)),  FF = Linear(GELU(Linear(.)))
Var AttentionBlock(Var x, const AttentionBlockParams& p, int heads,
                   std::vector<Matrix>* weights_out = nullptr);

// Registers the parameters of one block under `prefix` using Xavier-uniform
// weights, zero biases and unit layer-norm gains.
class Rng;
AttentionBlockParams RegisterAttentionBlock(ParameterRegistry& registry,
                                            const std::string& prefix, int d,
                                            int ff, Rng& rng);
LinearParams RegisterLinear(ParameterRegistry& registry,
                            const std::string& prefix, int in, int out,
                            Rng& rng, bool with_bias = true);

// Standard sinusoidal position table, rows x d.
Matrix SinusoidalPositions(Eigen::Index rows, Eigen::Index d);

}  // namespace dynac

#endif  // DYNAC_OPS_H_
