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

#include "dynac/ctc.h"

#include <cmath>
#include <limits>

namespace dynac {

namespace {

inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double SafeLog(double p) {
  return p > 0.0 ? std::max(std::log(p), kLogZero) : kLogZero;
}

void CheckLabels(const Matrix& grid, const Transcript& y, int blank) {
  if (blank < 0 || blank >= grid.cols()) {
    throw DimensionError("blank column outside grid " + ShapeString(grid));
  }
  for (int id : y) {
    if (id == blank) throw IntegrityError("reference contains the blank id");
    if (id < 0 || id >= grid.cols()) {
      throw DimensionError("label " + std::to_string(id) +
                           " outside grid " + ShapeString(grid));
    }
  }
}

}  // namespace

Transcript Collapse(const AlignmentPath& path, int blank) {
  Transcript out;
  int prev = -1;
  for (int a : path) {
    if (a != prev && a != blank) out.push_back(a);
    prev = a;
  }
  return out;
}

int CtcRequiredFrames(const Transcript& y) {
  int n = static_cast<int>(y.size());
  for (std::size_t i = 1; i < y.size(); ++i) n += (y[i] == y[i - 1]);
  return n;
}

double CtcNllFromLogProbs(const Matrix& log_probs, const Transcript& y,
                          int blank, Matrix* grad) {
  CheckLabels(log_probs, y, blank);
  const int T = static_cast<int>(log_probs.rows());
  const double inf = std::numeric_limits<double>::infinity();
  if (T == 0 || CtcRequiredFrames(y) > T) return inf;

  // Extended label sequence: blank, y1, blank, y2, ..., yU, blank.
  const int S = 2 * static_cast<int>(y.size()) + 1;
  std::vector<int> ext(S, blank);
  for (std::size_t u = 0; u < y.size(); ++u) ext[2 * u + 1] = y[u];
  auto can_skip = [&](int s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };
  auto lp = [&](int t, int s) {
    return std::max(log_probs(t, ext[s]), kLogZero);
  };

  Matrix alpha = Matrix::Constant(T, S, kLogZero);
  alpha(0, 0) = lp(0, 0);
  if (S > 1) alpha(0, 1) = lp(0, 1);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a <= kLogZero ? kLogZero : a + lp(t, s);
    }
  }
  double log_p = alpha(T - 1, S - 1);
  if (S > 1) log_p = LogAdd(log_p, alpha(T - 1, S - 2));
  if (log_p <= kLogZero / 2) return inf;

  if (grad) {
    Matrix beta = Matrix::Constant(T, S, kLogZero);
    beta(T - 1, S - 1) = 0.0;
    if (S > 1) beta(T - 1, S - 2) = 0.0;
    for (int t = T - 2; t >= 0; --t) {
      for (int s = 0; s < S; ++s) {
        double b = beta(t + 1, s) + lp(t + 1, s);
        if (s + 1 < S) b = LogAdd(b, beta(t + 1, s + 1) + lp(t + 1, s + 1));
        if (s + 2 < S && can_skip(s + 2))
          b = LogAdd(b, beta(t + 1, s + 2) + lp(t + 1, s + 2));
        beta(t, s) = b <= kLogZero / 2 ? kLogZero : b;
      }
    }
    grad->setZero(log_probs.rows(), log_probs.cols());
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        double occ = alpha(t, s) + beta(t, s) - log_p;
        if (occ > kLogZero / 2) (*grad)(t, ext[s]) -= std::exp(occ);
      }
    }
  }
  return -log_p;
}

double CtcNll(const Matrix& probs, const Transcript& y, int blank) {
  Matrix lp = probs.unaryExpr([](double p) { return SafeLog(p); });
  return CtcNllFromLogProbs(lp, y, blank);
}

Matrix CtcNllGradProbs(const Matrix& probs, const Transcript& y, int blank) {
  Matrix lp = probs.unaryExpr([](double p) { return SafeLog(p); });
  Matrix g;
  double nll = CtcNllFromLogProbs(lp, y, blank, &g);
  if (!std::isfinite(nll)) {
    throw InfeasibleAlignment("no alignment for reference of length " +
                              std::to_string(y.size()));
  }
  return g.cwiseQuotient(probs);
}

double CtcNllOracle(const Matrix& probs, const Transcript& y, int blank) {
  CheckLabels(probs, y, blank);
  const long long C = probs.cols();
  const long long T = probs.rows();
  long long total = 1;
  for (long long t = 0; t < T; ++t) {
    total *= C;
    if (total > 1000000) {
      throw std::length_error("alignment space too large to enumerate");
    }
  }
  double sum = 0.0;
  AlignmentPath path(T, 0);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    double p = 1.0;
    for (long long t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % C);
      c /= C;
      p *= probs(t, path[t]);
    }
    if (p != 0.0 && Collapse(path, blank) == y) sum += p;
  }
  return sum > 0.0 ? -std::log(sum) : std::numeric_limits<double>::infinity();
}

Var CtcLoss(Var log_probs, const Transcript& y, int blank) {
  Matrix grad;
  double nll = CtcNllFromLogProbs(log_probs.value(), y, blank,
                                  log_probs.graph->recording() ? &grad : nullptr);
  if (!std::isfinite(nll)) {
    throw InfeasibleAlignment("no alignment for reference of length " +
                              std::to_string(y.size()) + " over " +
                              std::to_string(log_probs.rows()) + " frames");
  }
  Matrix out(1, 1);
  out(0, 0) = nll;
  return log_probs.graph->Push(
      std::move(out), {log_probs},
      [log_probs, grad = std::move(grad)](Graph& g, Var, const Matrix& og) {
        g.AccumulateGrad(log_probs, grad * og(0, 0));
      });
}

std::optional<double> IntermediateLoss(const std::vector<Matrix>& grids,
                                       const Transcript& y, int blank) {
  if (grids.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& z : grids) sum += CtcNll(z, y, blank);
  return sum / static_cast<double>(grids.size());
}

LossWeights ComputeLossWeights(double lambda, bool has_inter, bool att_enabled) {
  if (!(lambda > 0.0 && lambda <= 0.5)) {
    throw ConfigError("lambda must lie in (0, 0.5], got " +
                      std::to_string(lambda));
  }
  LossWeights w;
  w.ctc = lambda;
  w.inter = has_inter ? lambda : 0.0;
  w.att = att_enabled ? 1.0 - 2.0 * lambda : 0.0;
  if (!has_inter || !att_enabled) {
    double total = w.ctc + w.inter + w.att;
    w.ctc /= total;
    w.inter /= total;
    w.att /= total;
    w.renormalized = true;
  }
  return w;
}

LossBreakdown TotalLoss(double l_ctc, std::optional<double> l_inter,
                        std::optional<double> l_att, double lambda,
                        bool att_enabled) {
  if (att_enabled && !l_att) {
    throw ConfigError("attention loss enabled but no decoder output given");
  }
  LossBreakdown b;
  b.weights = ComputeLossWeights(lambda, l_inter.has_value(), att_enabled);
  b.l_ctc = l_ctc;
  b.l_inter = l_inter;
  if (att_enabled) b.l_att = l_att;
  b.l_total = b.weights.ctc * l_ctc;
  if (l_inter) b.l_total += b.weights.inter * *l_inter;
  if (att_enabled) b.l_total += b.weights.att * *l_att;
  return b;
}

}  // namespace dynac
