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

#include <cmath>
#include <limits>
#include <numeric>

#include "gtest/gtest.h"

#include "dynac/ctc.h"
#include "dynac/ops.h"
#include "test_util.h"

namespace dynac {
namespace {

using testing::RandomProbGrid;

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(CollapseTest, MergeThenDelete) {
  const int blank = 9;
  EXPECT_EQ(Collapse({blank, blank, blank}, blank), Transcript{});
  EXPECT_EQ(Collapse({1, 1, blank, 1}, blank), (Transcript{1, 1}));
  EXPECT_EQ(Collapse({1, 2, 2, blank, 3}, blank), (Transcript{1, 2, 3}));
}

TEST(CollapseTest, IdempotentOnFrameExpansion) {
  Rng rng(1);
  const int blank = 4;
  for (int trial = 0; trial < 200; ++trial) {
    Transcript y;
    int len = rng.UniformInt(0, 6);
    for (int i = 0; i < len; ++i) {
      int id;
      do id = rng.UniformInt(0, 3); while (!y.empty() && id == y.back());
      y.push_back(id);
    }
    AlignmentPath frames(y.begin(), y.end());
    EXPECT_EQ(Collapse(Collapse(frames, blank), blank), y);
  }
}

TEST(CtcTest, TwoFrameSingleLabel) {
  // Columns {a, blank}, all 0.5: paths a-, -a, aa.
  Matrix z = Matrix::Constant(2, 2, 0.5);
  EXPECT_NEAR(CtcNll(z, {0}, 1), -std::log(0.75), 1e-12);
  EXPECT_NEAR(CtcNllOracle(z, {0}, 1), -std::log(0.75), 1e-12);
}

TEST(CtcTest, RepeatNeedsBlank) {
  Matrix z = Matrix::Constant(2, 2, 0.5);
  EXPECT_EQ(CtcNll(z, {0, 0}, 1), kInf);
  EXPECT_EQ(CtcNllOracle(z, {0, 0}, 1), kInf);
  EXPECT_EQ(CtcRequiredFrames({0, 0}), 3);
  EXPECT_EQ(CtcRequiredFrames({0, 1, 1, 1}), 6);
  EXPECT_EQ(CtcRequiredFrames({}), 0);
}

TEST(CtcTest, SingleDynamicFrame) {
  // K=2 statics, blank 2, dynamic 3.
  Matrix z(1, 4);
  z << 0.1, 0.2, 0.3, 0.4;
  EXPECT_NEAR(CtcNll(z, {3}, 2), -std::log(0.4), 1e-15);
}

TEST(CtcTest, EmptyReferenceIsAllBlank) {
  Matrix z(2, 3);
  z << 0.2, 0.5, 0.3, 0.1, 0.6, 0.3;
  EXPECT_NEAR(CtcNll(z, {}, 1), -std::log(0.5 * 0.6), 1e-12);
}

TEST(CtcTest, ThreeFramesUniform) {
  // Of the 8 paths, 6 collapse to [a]: blank-only gives [] and a,blank,a
  // gives [a, a].
  Matrix z = Matrix::Constant(3, 2, 0.5);
  EXPECT_NEAR(CtcNll(z, {0}, 1), -std::log(6.0 / 8.0), 1e-12);
  EXPECT_NEAR(CtcNllOracle(z, {0}, 1), -std::log(6.0 / 8.0), 1e-12);
}

TEST(CtcTest, OracleRefusesLargeSpaces) {
  Matrix z = Matrix::Constant(11, 4, 0.25);  // 4^11 > 1e6
  EXPECT_THROW(CtcNllOracle(z, {0}, 3), std::length_error);
}

TEST(CtcTest, MatchesOracleOnRandomGrids) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const int C = rng.UniformInt(2, 4);
    const int T = rng.UniformInt(1, 5);
    const int blank = rng.UniformInt(0, C - 1);
    Transcript y;
    int len = rng.UniformInt(0, 3);
    for (int i = 0; i < len; ++i) {
      int id;
      do id = rng.UniformInt(0, C - 1); while (id == blank);
      y.push_back(id);
    }
    Matrix z = RandomProbGrid(rng, T, C);
    double a = CtcNll(z, y, blank);
    double b = CtcNllOracle(z, y, blank);
    if (std::isinf(b)) {
      EXPECT_TRUE(std::isinf(a));
    } else {
      EXPECT_NEAR(a, b, 1e-9);
    }
  }
}

TEST(CtcTest, ProbabilityGradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix z = RandomProbGrid(rng, 5, 4);
    // Odd trials: K=2, blank 2, dynamic 3. Even trials: K=1, dynamic 2 and 3.
    const int K = trial % 2 ? 2 : 1;
    Transcript y = trial % 2 ? Transcript{1, 3} : Transcript{0, 3, 3};
    Matrix g = CtcNllGradProbs(z, y, K);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Matrix up = z, down = z;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      double num = (CtcNll(up, y, K) - CtcNll(down, y, K)) / 2e-6;
      EXPECT_LE(testing::RelativeError(g.data()[i], num), 1e-4);
    }
  }
}

TEST(CtcTest, LossOpGradientOnLogits) {
  Rng rng(4);
  Matrix logits = testing::RandomMatrix(rng, 6, 5);
  double err = testing::GradCheckInputs({logits}, [](Graph&, const std::vector<Var>& v) {
    return CtcLoss(RowLogSoftmax(v[0]), {0, 4, 4, 2}, 3);
  });
  EXPECT_LE(err, 1e-4);
}

TEST(CtcTest, LossOpThrowsOnInfeasible) {
  Graph g;
  Var lp = RowLogSoftmax(g.Constant(Matrix::Zero(2, 3)));
  EXPECT_THROW(CtcLoss(lp, {0, 0}, 2), InfeasibleAlignment);
}

TEST(CtcTest, PermutationEquivariantInDynamicColumns) {
  Rng rng(5);
  const int K = 3, blank = 3, N = 4;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix z = RandomProbGrid(rng, 8, K + 1 + N);
    std::vector<int> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    rng.Shuffle(perm);
    Matrix zp = z;
    for (int n = 0; n < N; ++n) zp.col(K + 1 + perm[n]) = z.col(K + 1 + n);
    Transcript y = {0, K + 1, 2, K + 3};
    Transcript yp;
    for (int id : y) yp.push_back(id > K ? K + 1 + perm[id - K - 1] : id);
    EXPECT_NEAR(CtcNll(z, y, blank), CtcNll(zp, yp, blank), 1e-12);
  }
}

TEST(CtcTest, MoreMassOnReferencePathNeverHurts) {
  // P(y) is a polynomial with non-negative coefficients in the entries of Z,
  // so raising an entry used by a valid path cannot lower it.
  Rng rng(6);
  const std::vector<int> path = {0, 2, 1, 1};  // collapses to [0, 1]
  for (int trial = 0; trial < 50; ++trial) {
    Matrix z = RandomProbGrid(rng, 4, 3);
    double prev = CtcNll(z, {0, 1}, 2);
    for (int t = 0; t < 4; ++t) {
      z(t, path[t]) += rng.Uniform(0.0, 0.5);
      double cur = CtcNll(z, {0, 1}, 2);
      EXPECT_LE(cur, prev + 1e-12);
      prev = cur;
    }
  }
}

TEST(IntermediateLossTest, MeanOfGrids) {
  Rng rng(7);
  Matrix a = RandomProbGrid(rng, 5, 4), b = RandomProbGrid(rng, 5, 4), c = RandomProbGrid(rng, 5, 4);
  Transcript y = {0, 2};
  EXPECT_EQ(IntermediateLoss({}, y, 3), std::nullopt);
  EXPECT_DOUBLE_EQ(*IntermediateLoss({a}, y, 3), CtcNll(a, y, 3));
  EXPECT_NEAR(*IntermediateLoss({a, a, a}, y, 3), CtcNll(a, y, 3), 1e-12);
  EXPECT_NEAR(*IntermediateLoss({a, b, c}, y, 3),
              (CtcNll(a, y, 3) + CtcNll(b, y, 3) + CtcNll(c, y, 3)) / 3.0, 1e-12);
}

TEST(TotalLossTest, WeightedSum) {
  LossBreakdown b = TotalLoss(2.0, 4.0, 1.0, 0.15, true);
  EXPECT_NEAR(b.l_total, 1.6, 1e-12);
  EXPECT_FALSE(b.weights.renormalized);
}

TEST(TotalLossTest, AttentionDisabledRenormalizes) {
  LossBreakdown b = TotalLoss(3.0, 3.0, std::nullopt, 0.15, false);
  EXPECT_NEAR(b.l_total, 3.0, 1e-12);
  EXPECT_TRUE(b.weights.renormalized);
  EXPECT_DOUBLE_EQ(b.weights.ctc, 0.5);
  EXPECT_DOUBLE_EQ(b.weights.inter, 0.5);
  LossBreakdown c = TotalLoss(2.0, 6.0, std::nullopt, 0.15, false);
  EXPECT_NEAR(c.l_total, 4.0, 1e-12);
  LossBreakdown only = TotalLoss(2.5, std::nullopt, std::nullopt, 0.15, false);
  EXPECT_DOUBLE_EQ(only.l_total, 2.5);
}

TEST(TotalLossTest, HalfLambdaIgnoresAttention) {
  LossBreakdown a = TotalLoss(2.0, 4.0, 1.0, 0.5, true);
  LossBreakdown b = TotalLoss(2.0, 4.0, 100.0, 0.5, true);
  EXPECT_DOUBLE_EQ(a.l_total, b.l_total);
  EXPECT_DOUBLE_EQ(a.weights.att, 0.0);
}

TEST(TotalLossTest, LambdaRange) {
  EXPECT_THROW(TotalLoss(1, 1, 1, 0.0, true), ConfigError);
  EXPECT_THROW(TotalLoss(1, 1, 1, 0.51, true), ConfigError);
  EXPECT_THROW(TotalLoss(1, 1, std::nullopt, 0.2, true), ConfigError);
  EXPECT_NO_THROW(TotalLoss(1, 1, 1, 0.5, true));
}

}  // namespace
}  // namespace dynac
