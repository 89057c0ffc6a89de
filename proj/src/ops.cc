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

#include "dynac/ops.h"

#include <cmath>
#include <numbers>

#include "dynac/rng.h"

namespace dynac {

namespace {

void CheckSameGraph(Var a, Var b) {
  if (a.graph != b.graph) throw std::logic_error("vars from different graphs");
}

void RequireMatMul(const Matrix& a, const Matrix& b, bool trans_b) {
  Eigen::Index inner = trans_b ? b.cols() : b.rows();
  if (a.cols() != inner) {
    throw DimensionError("matmul shape mismatch: " + ShapeString(a) + " vs " +
                         ShapeString(b) + (trans_b ? " (transposed)" : ""));
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  CheckSameGraph(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  RequireMatMul(av, bv, false);
  Matrix out = av * bv;
  return a.graph->Push(std::move(out), {a, b},
                       [a, b](Graph& g, Var, const Matrix& og) {
                         if (g.NeedsGrad(a))
                           g.AccumulateGrad(a, og * g.Value(b).transpose());
                         if (g.NeedsGrad(b))
                           g.AccumulateGrad(b, g.Value(a).transpose() * og);
                       });
}

Var MatMulTransB(Var a, Var b) {
  CheckSameGraph(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  RequireMatMul(av, bv, true);
  Matrix out = av * bv.transpose();
  return a.graph->Push(std::move(out), {a, b},
                       [a, b](Graph& g, Var, const Matrix& og) {
                         if (g.NeedsGrad(a)) g.AccumulateGrad(a, og * g.Value(b));
                         if (g.NeedsGrad(b))
                           g.AccumulateGrad(b, og.transpose() * g.Value(a));
                       });
}

Var Add(Var a, Var b) {
  CheckSameGraph(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw DimensionError("add shape mismatch: " + ShapeString(av) + " vs " +
                         ShapeString(bv));
  }
  return a.graph->Push(av + bv, {a, b},
                       [a, b](Graph& g, Var, const Matrix& og) {
                         g.AccumulateGrad(a, og);
                         g.AccumulateGrad(b, og);
                       });
}

Var AddRowBroadcast(Var x, Var bias) {
  CheckSameGraph(x, bias);
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw DimensionError("bias shape mismatch: " + ShapeString(xv) + " vs " +
                         ShapeString(bv));
  }
  Matrix out = xv.rowwise() + bv.row(0);
  return x.graph->Push(std::move(out), {x, bias},
                       [x, bias](Graph& g, Var, const Matrix& og) {
                         g.AccumulateGrad(x, og);
                         if (g.NeedsGrad(bias))
                           g.AccumulateGrad(bias, og.colwise().sum());
                       });
}

Var Scale(Var x, double s) {
  return x.graph->Push(x.value() * s, {x},
                       [x, s](Graph& g, Var, const Matrix& og) {
                         g.AccumulateGrad(x, og * s);
                       });
}

Var RowSoftmax(Var x) {
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  if (xv.cols() > 0) {
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      double m = xv.row(r).maxCoeff();
      y.row(r) = (xv.row(r).array() - m).exp();
      y.row(r) /= y.row(r).sum();
    }
  }
  return x.graph->Push(std::move(y), {x},
                       [x](Graph& g, Var self, const Matrix& og) {
                         const Matrix& yv = g.Value(self);
                         Eigen::VectorXd dots =
                             (og.array() * yv.array()).rowwise().sum();
                         Matrix gx = yv.array() * (og.colwise() - dots).array();
                         g.AccumulateGrad(x, gx);
                       });
}

Var RowLogSoftmax(Var x) {
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  if (xv.cols() > 0) {
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      double m = xv.row(r).maxCoeff();
      double lse = m + std::log((xv.row(r).array() - m).exp().sum());
      y.row(r) = xv.row(r).array() - lse;
    }
  }
  return x.graph->Push(std::move(y), {x},
                       [x](Graph& g, Var self, const Matrix& og) {
                         Matrix p = g.Value(self).array().exp();
                         Eigen::VectorXd sums = og.rowwise().sum();
                         Matrix gx = og - (p.array().colwise() * sums.array())
                                              .matrix();
                         g.AccumulateGrad(x, gx);
                       });
}

constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;

Var Gelu(Var x) {
  const Matrix& xv = x.value();
  Matrix y = xv.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  });
  return x.graph->Push(std::move(y), {x}, [x](Graph& g, Var, const Matrix& og) {
    const double inv_sqrt_2pi = std::numbers::inv_sqrtpi * kInvSqrt2;
    Matrix d = g.Value(x).unaryExpr([inv_sqrt_2pi](double v) {
      return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
             v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
    });
    g.AccumulateGrad(x, (og.array() * d.array()).matrix());
  });
}

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  CheckSameGraph(x, gain);
  CheckSameGraph(x, bias);
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 ||
      bias.cols() != n) {
    throw DimensionError("layer norm shape mismatch: " + ShapeString(xv) +
                         " vs gain " + ShapeString(gain.value()));
  }
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    double mean = xv.row(r).mean();
    double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * gain.value().row(0).array())
                 .rowwise() +
             bias.value().row(0).array();
  return x.graph->Push(
      std::move(y), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Graph& g, Var, const Matrix& og) {
        if (g.NeedsGrad(gain))
          g.AccumulateGrad(gain, (og.array() * xhat.array()).colwise().sum().matrix());
        if (g.NeedsGrad(bias)) g.AccumulateGrad(bias, og.colwise().sum());
        if (!g.NeedsGrad(x)) return;
        Matrix gxhat = og.array().rowwise() * g.Value(gain).row(0).array();
        Eigen::VectorXd m1 = gxhat.rowwise().mean();
        Eigen::VectorXd m2 = (gxhat.array() * xhat.array()).rowwise().mean();
        Matrix gx = ((gxhat.colwise() - m1).array() -
                     xhat.array().colwise() * m2.array())
                        .colwise() *
                    inv_std.array();
        g.AccumulateGrad(x, gx);
      });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat row mismatch: " + ShapeString(parts[0].value()) +
                           " vs " + ShapeString(p.value()));
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].graph->Push(std::move(out), parts,
                              [parts](Graph& g, Var, const Matrix& og) {
                                Eigen::Index c = 0;
                                for (const Var& p : parts) {
                                  if (g.NeedsGrad(p))
                                    g.AccumulateGrad(p, og.middleCols(c, p.cols()));
                                  c += p.cols();
                                }
                              });
}

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat col mismatch: " + ShapeString(parts[0].value()) +
                           " vs " + ShapeString(p.value()));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts[0].graph->Push(std::move(out), parts,
                              [parts](Graph& g, Var, const Matrix& og) {
                                Eigen::Index r = 0;
                                for (const Var& p : parts) {
                                  if (g.NeedsGrad(p))
                                    g.AccumulateGrad(p, og.middleRows(r, p.rows()));
                                  r += p.rows();
                                }
                              });
}

Var SliceCols(Var x, Eigen::Index begin, Eigen::Index count) {
  const Matrix& xv = x.value();
  if (begin < 0 || count < 0 || begin + count > xv.cols()) {
    throw DimensionError("column slice out of range on " + ShapeString(xv));
  }
  Matrix out = xv.middleCols(begin, count);
  return x.graph->Push(std::move(out), {x},
                       [x, begin, count](Graph& g, Var, const Matrix& og) {
                         Matrix gx = Matrix::Zero(g.Value(x).rows(),
                                                  g.Value(x).cols());
                         gx.middleCols(begin, count) = og;
                         g.AccumulateGrad(x, gx);
                       });
}

Var MeanRows(Var x) {
  const Matrix& xv = x.value();
  if (xv.rows() == 0) throw DimensionError("mean over zero rows");
  Matrix out = xv.colwise().mean();
  return x.graph->Push(std::move(out), {x}, [x](Graph& g, Var, const Matrix& og) {
    const Eigen::Index rows = g.Value(x).rows();
    Matrix gx = og.replicate(rows, 1) / static_cast<double>(rows);
    g.AccumulateGrad(x, gx);
  });
}

Var Sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return x.graph->Push(std::move(out), {x}, [x](Graph& g, Var, const Matrix& og) {
    g.AccumulateGrad(x, Matrix::Constant(g.Value(x).rows(), g.Value(x).cols(),
                                         og(0, 0)));
  });
}

Var GatherRows(Var table, const std::vector<int>& ids) {
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw DimensionError("row id " + std::to_string(ids[i]) +
                           " outside table " + ShapeString(tv));
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  return table.graph->Push(std::move(out), {table},
                           [table, ids](Graph& g, Var, const Matrix& og) {
                             Matrix gt = Matrix::Zero(g.Value(table).rows(),
                                                      g.Value(table).cols());
                             for (std::size_t i = 0; i < ids.size(); ++i)
                               gt.row(ids[i]) += og.row(static_cast<Eigen::Index>(i));
                             g.AccumulateGrad(table, gt);
                           });
}

Var Linear(Var x, const LinearParams& p) {
  Graph& graph = *x.graph;
  Var w = graph.Param(*p.weight);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  RequireMatMul(xv, wv, false);
  Matrix out = xv * wv;
  if (p.bias) {
    Var b = graph.Param(*p.bias);
    out.rowwise() += b.value().row(0);
    return graph.Push(std::move(out), {x, w, b},
                      [x, w, b](Graph& g, Var, const Matrix& og) {
                        if (g.NeedsGrad(x))
                          g.AccumulateGrad(x, og * g.Value(w).transpose());
                        if (g.NeedsGrad(w))
                          g.AccumulateGrad(w, g.Value(x).transpose() * og);
                        if (g.NeedsGrad(b))
                          g.AccumulateGrad(b, og.colwise().sum());
                      });
  }
  return graph.Push(std::move(out), {x, w},
                    [x, w](Graph& g, Var, const Matrix& og) {
                      if (g.NeedsGrad(x))
                        g.AccumulateGrad(x, og * g.Value(w).transpose());
                      if (g.NeedsGrad(w))
                        g.AccumulateGrad(w, g.Value(x).transpose() * og);
                    });
}

Var PickNll(Var log_probs, const std::vector<int>& targets) {
  const Matrix& lp = log_probs.value();
  if (static_cast<Eigen::Index>(targets.size()) != lp.rows()) {
    throw DimensionError("target count does not match rows of " +
                         ShapeString(lp));
  }
  Matrix out(1, 1);
  out(0, 0) = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] < 0 || targets[r] >= lp.cols()) {
      throw DimensionError("target id out of range");
    }
    out(0, 0) -= lp(static_cast<Eigen::Index>(r), targets[r]);
  }
  return log_probs.graph->Push(
      std::move(out), {log_probs},
      [log_probs, targets](Graph& g, Var, const Matrix& og) {
        Matrix gx = Matrix::Zero(g.Value(log_probs).rows(),
                                 g.Value(log_probs).cols());
        for (std::size_t r = 0; r < targets.size(); ++r)
          gx(static_cast<Eigen::Index>(r), targets[r]) = -og(0, 0);
        g.AccumulateGrad(log_probs, gx);
      });
}

namespace {

Var AttendHeads(Var q, Var k, Var v, const LinearParams& out, int heads,
                std::vector<Matrix>* weights_out) {
  const Eigen::Index d = q.cols();
  if (heads <= 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> per_head;
  per_head.reserve(heads);
  if (weights_out) weights_out->clear();
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : SliceCols(q, h * dh, dh);
    Var kh = heads == 1 ? k : SliceCols(k, h * dh, dh);
    Var vh = heads == 1 ? v : SliceCols(v, h * dh, dh);
    Var att = RowSoftmax(Scale(MatMulTransB(qh, kh), scale));
    if (weights_out) weights_out->push_back(att.value());
    per_head.push_back(MatMul(att, vh));
  }
  Var merged = heads == 1 ? per_head[0] : ConcatCols(per_head);
  return Linear(merged, out);
}

}  // namespace

Var MultiHeadAttention(Var x, const LinearParams& query, const LinearParams& key,
                       const LinearParams& value, const LinearParams& out,
                       int heads, std::vector<Matrix>* weights_out) {
  const Eigen::Index d = query.weight->value.cols();
  if (heads <= 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  return AttendHeads(Linear(x, query), Linear(x, key), Linear(x, value), out,
                     heads, weights_out);
}

Var MultiHeadCrossAttention(Var queries, Var memory, const LinearParams& query,
                            const LinearParams& key, const LinearParams& value,
                            const LinearParams& out, int heads) {
  return AttendHeads(Linear(queries, query), Linear(memory, key),
                     Linear(memory, value), out, heads, nullptr);
}

Var AttentionBlock(Var x, const AttentionBlockParams& p, int heads,
                   std::vector<Matrix>* weights_out) {
  Graph& g = *x.graph;
  Var h = LayerNorm(x, g.Param(*p.ln1_gain), g.Param(*p.ln1_bias));
  x = Add(x, MultiHeadAttention(h, p.query, p.key, p.value, p.out, heads,
                                weights_out));
  Var h2 = LayerNorm(x, g.Param(*p.ln2_gain), g.Param(*p.ln2_bias));
  return Add(x, Linear(Gelu(Linear(h2, p.ff1)), p.ff2));
}

LinearParams RegisterLinear(ParameterRegistry& registry,
                            const std::string& prefix, int in, int out,
                            Rng& rng, bool with_bias) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.Uniform(-limit, limit);
  LinearParams p;
  p.weight = &registry.Add(prefix + ".weight", std::move(w));
  if (with_bias) p.bias = &registry.Add(prefix + ".bias", Matrix::Zero(1, out));
  return p;
}

AttentionBlockParams RegisterAttentionBlock(ParameterRegistry& registry,
                                            const std::string& prefix, int d,
                                            int ff, Rng& rng) {
  AttentionBlockParams p;
  p.ln1_gain = &registry.Add(prefix + ".ln1.gain", Matrix::Ones(1, d));
  p.ln1_bias = &registry.Add(prefix + ".ln1.bias", Matrix::Zero(1, d));
  p.query = RegisterLinear(registry, prefix + ".attn.query", d, d, rng);
  p.key = RegisterLinear(registry, prefix + ".attn.key", d, d, rng);
  p.value = RegisterLinear(registry, prefix + ".attn.value", d, d, rng);
  p.out = RegisterLinear(registry, prefix + ".attn.out", d, d, rng);
  p.ln2_gain = &registry.Add(prefix + ".ln2.gain", Matrix::Ones(1, d));
  p.ln2_bias = &registry.Add(prefix + ".ln2.bias", Matrix::Zero(1, d));
  p.ff1 = RegisterLinear(registry, prefix + ".ff1", d, ff, rng);
  p.ff2 = RegisterLinear(registry, prefix + ".ff2", ff, d, rng);
  return p;
}

Matrix SinusoidalPositions(Eigen::Index rows, Eigen::Index d) {
  Matrix pe(rows, d);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index i = 0; i < d; ++i) {
      double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) /
                                          static_cast<double>(d));
      pe(t, i) = (i % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return pe;
}

}  // namespace dynac
