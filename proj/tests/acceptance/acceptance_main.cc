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
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: acceptance [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynac/ctc.h"
#include "dynac/decode.h"
#include "dynac/evaluate.h"
#include "dynac/model.h"
#include "dynac/rng.h"
#include "dynac/synthdata.h"
#include "dynac/trainer.h"

namespace dynac {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Tolerances and budgets.
constexpr int kCtcCases = 600;
constexpr double kCtcTol = 1e-9;
constexpr double kCtcSeconds = 10.0;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradFloor = 1e-6;
constexpr double kGradSeconds = 60.0;
constexpr int kMuGrids = 1200;
constexpr double kTrainCpuSeconds = 15.0 * 60.0;
constexpr int kEvalN = 50;
constexpr double kBiasRatio = 0.5;
constexpr double kUnbiasedSlack = 2.0;
constexpr double kAblationRatio = 2.0;
constexpr double kRtfRatio = 1.3;
constexpr double kRtfSpread = 0.2;
constexpr int kRtfRepeats = 3;
constexpr int kSweepTargets = 10;
constexpr int kSweepSmallN = 10;
constexpr double kSweepBiasGrowth = 1.5;
constexpr double kSweepUnbiasedSlack = 1.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
json summary = json::object();

void Report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail
            << std::endl;
  if (!o.pass) ++failures;
  summary[name] = {{"pass", o.pass}, {"detail", o.detail}};
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double CpuSeconds() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

std::string Fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double Pct(const ErrorCount& c) { return c.Percent().value_or(0.0); }

Matrix RandomGrid(Rng& rng, Eigen::Index T, Eigen::Index C) {
  Matrix z(T, C);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index c = 0; c < C; ++c) z(t, c) = rng.Uniform(0.01, 1.0);
    z.row(t) /= z.row(t).sum();
  }
  return z;
}

// Forward recursion against path enumeration on small grids with at least
// one dynamic column.
Outcome CtcOracle() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  int mismatched_inf = 0;
  for (int i = 0; i < kCtcCases; ++i) {
    const int C = rng.UniformInt(2, 4);
    const int K = rng.UniformInt(0, C - 2);  // leaves >= 1 dynamic column
    const int T = rng.UniformInt(1, 5);
    Matrix z = RandomGrid(rng, T, C);
    Transcript y(rng.UniformInt(0, 3));
    for (int& id : y) {
      id = rng.UniformInt(0, C - 2);
      if (id >= K) ++id;  // skip the blank column
    }
    const double fast = CtcNll(z, y, K);
    const double slow = CtcNllOracle(z, y, K);
    if (std::isinf(fast) || std::isinf(slow)) {
      if (std::isinf(fast) != std::isinf(slow)) ++mismatched_inf;
      continue;
    }
    worst = std::max(worst, std::abs(fast - slow));
  }
  const double secs = Seconds(t0);
  Outcome o;
  o.pass = worst <= kCtcTol && mismatched_inf == 0 && secs < kCtcSeconds;
  o.detail = std::to_string(kCtcCases) + " cases, max |diff| " + Fmt(worst) +
             " (tol " + Fmt(kCtcTol) + "), feasibility mismatches " +
             std::to_string(mismatched_inf) + ", " + Fmt(secs, 3) + " s";
  return o;
}

StaticVocabulary TinyVocab() {
  const std::string b = kWordBoundary;
  return StaticVocabulary({b + "ka", b + "ki", "ka", "ki", "ku"});
}

Outcome Gradients() {
  auto t0 = std::chrono::steady_clock::now();
  ModelConfig c;
  c.d_in = 3;
  c.d = 8;
  c.K = 5;
  c.L = 2;
  c.S = {1};
  c.heads = 2;
  c.ff = 12;
  c.bias_layers = 1;
  c.max_phrase_tokens = 4;
  c.seed = 3;
  DynacModel m(c);
  StaticVocabulary voc = TinyVocab();
  DynamicVocabulary dv(voc, {{"kaka", {0, 2}}, {"kiku", {1, 4}}});
  Rng rng(17);
  std::vector<Utterance> utts(2);
  for (auto& u : utts) {
    u.features = Matrix(4, c.d_in);
    for (Eigen::Index i = 0; i < u.features.size(); ++i) {
      u.features.data()[i] = rng.Normal(0.0, 1.0);
    }
  }
  utts[0].reference = {0, 2, 3};  // rewritten to <kaka> ki
  utts[1].reference = {1, 4};     // rewritten to <kiku>
  std::vector<const Utterance*> batch = {&utts[0], &utts[1]};
  auto loss = [&](Graph& g) {
    return *ComputeBatchLoss(g, m, batch, dv, Mode::kDynac).total;
  };

  ParameterRegistry& reg = m.registry();
  reg.ZeroGrad();
  {
    Graph g;
    g.Backward(loss(g));
  }
  auto eval = [&]() {
    Graph g(false);
    return loss(g).value()(0, 0);
  };
  double worst = 0.0;
  std::string worst_name;
  int checked = 0;
  for (const auto& p : reg.params()) {
    if (!p->trainable) continue;
    ++checked;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + kGradStep;
      const double up = eval();
      p->value.data()[i] = orig - kGradStep;
      const double down = eval();
      p->value.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * kGradStep);
      const double analytic = p->grad.data()[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
      if (rel > worst) {
        worst = rel;
        worst_name = p->name;
      }
    }
  }
  const double secs = Seconds(t0);
  Outcome o;
  o.pass = checked > 0 && worst <= kGradTol && secs < kGradSeconds;
  o.detail = std::to_string(checked) + " parameters, max rel error " +
             Fmt(worst) + " at " + worst_name + " (tol " + Fmt(kGradTol) +
             "), " + Fmt(secs, 3) + " s";
  return o;
}

Outcome ParameterCount() {
  ModelConfig c;  // default desk-scale model
  DynacModel m(c);
  StaticVocabulary voc = SyllableVocabulary(c.K);
  const std::size_t params = m.registry().size();
  const std::size_t scalars = m.registry().NumTrainableScalars();
  Rng rng(5);
  Matrix x(12, c.d_in);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal(0.0, 1.0);
  bool ok = true;
  std::string counts;
  for (int n : {0, 1, 100}) {
    std::vector<BiasPhrase> phrases;
    for (int i = 0; i < n; ++i) {
      phrases.push_back({"p" + std::to_string(i),
                         {i % 20, 20 + (i / 20) % 20, 20 + (i * 7) % 20}});
    }
    DynamicVocabulary dv(voc, phrases);
    Graph g;
    auto bias = m.EncodeBias(g, dv);
    ForwardVars fv = m.Forward(g, g.Constant(x), bias, Mode::kDynac);
    ok = ok && fv.final_scores.logits.cols() == c.K + 1 + n &&
         m.registry().size() == params &&
         m.registry().NumTrainableScalars() == scalars;
    counts += " N=" + std::to_string(n) + ":" + std::to_string(m.registry().size()) +
              "/" + std::to_string(m.registry().NumTrainableScalars());
  }
  Outcome o;
  o.pass = ok;
  o.detail = "tensors/scalars" + counts;
  return o;
}

Outcome MuMonotonicity() {
  Rng rng(23);
  int violations = 0;
  long dynamic_frames = 0;
  for (int i = 0; i < kMuGrids; ++i) {
    const int K = rng.UniformInt(1, 6);
    const int N = rng.UniformInt(1, 5);
    const int T = rng.UniformInt(1, 10);
    Matrix z = RandomGrid(rng, T, K + 1 + N);
    std::vector<double> mus(4);
    for (double& mu : mus) mu = std::exp(rng.Uniform(std::log(0.01), std::log(100.0)));
    std::sort(mus.begin(), mus.end());
    std::vector<AlignmentPath> paths;
    for (double mu : mus) paths.push_back(BiasedArgmax(z, K, mu));
    for (std::size_t a = 0; a + 1 < paths.size(); ++a) {
      for (int t = 0; t < T; ++t) {
        const bool dyn_lo = paths[a][t] > K;
        const bool dyn_hi = paths[a + 1][t] > K;
        if (dyn_lo && !dyn_hi) ++violations;
        if (dyn_lo && dyn_hi && paths[a][t] != paths[a + 1][t]) ++violations;
        dynamic_frames += dyn_lo;
      }
    }
  }
  Outcome o;
  o.pass = violations == 0 && dynamic_frames > 0;
  o.detail = std::to_string(kMuGrids) + " grids, " + std::to_string(dynamic_frames) +
             " dynamic-winning frames, " + std::to_string(violations) + " violations";
  return o;
}

json ReadJson(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return json::parse(is);
}

struct TrainedModel {
  LoadedModel loaded;
  double cpu_seconds = 0.0;
  double final_loss = 0.0;
};

TrainedModel TrainOne(const Corpus& corpus, const json& cfg_json, Mode mode,
                      const fs::path& dir) {
  json cj = cfg_json;
  cj["model"]["K"] = corpus.spec.K;
  cj["model"]["d_in"] = corpus.spec.d_in;
  TrainConfig cfg = TrainConfig::FromJson(cj);
  cfg.mode = mode;
  cfg.Validate();
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    if (e.epoch % 10 == 0 || e.epoch == cfg.epochs) {
      std::cerr << "# " << ModeName(mode) << " epoch " << e.epoch << " total "
                << e.mean_total << "\n";
    }
  };
  const double c0 = CpuSeconds();
  TrainResult r = Train(cfg, corpus, dir.string(), std::nullopt, hooks);
  TrainedModel out;
  out.cpu_seconds = CpuSeconds() - c0;
  out.final_loss = r.best_loss;
  out.loaded = LoadModel((dir / "best.ckpt").string(), &corpus.vocab);
  return out;
}

EvalReport Eval(const TrainedModel& m, const Corpus& corpus,
                const std::vector<std::string>& list) {
  DynamicVocabulary dv = DynamicVocabulary::FromSurfaces(corpus.vocab, list);
  DecodeOptions opts;
  opts.mode = m.loaded.trained_mode;
  return Evaluate(*m.loaded.model, corpus.test, corpus.vocab, dv, opts);
}

std::string Describe(const std::string& tag, const EvalReport& r) {
  return tag + " WER " + Fmt(Pct(r.wer)) + " U " + Fmt(Pct(r.u_wer)) + " B " +
         Fmt(Pct(r.b_wer));
}

double Rtf(const TrainedModel& m, const Corpus& corpus,
           const std::vector<std::string>& list) {
  DynamicVocabulary dv = DynamicVocabulary::FromSurfaces(corpus.vocab, list);
  BiasEmbeddings bias = m.loaded.model->EncodeBias(dv);
  DecodeOptions opts;
  opts.mode = m.loaded.trained_mode;
  return MeasureRtf(*m.loaded.model, corpus.test, bias, opts,
                    kDefaultFramePeriod, kRtfRepeats);
}

void EndToEnd(const fs::path& config_dir, const fs::path& work) {
  Corpus corpus = Generate(CorpusSpec::FromJson(ReadJson(config_dir / "corpus_default.json")));
  const json train_cfg = ReadJson(config_dir / "train_default.json");
  std::cerr << "# corpus: " << corpus.train.size() << " train, "
            << corpus.test.size() << " test, " << corpus.unseen_words.size()
            << " unseen words\n";

  TrainedModel plain = TrainOne(corpus, train_cfg, Mode::kPlainCtc, work / "plain-ctc");
  TrainedModel dyn = TrainOne(corpus, train_cfg, Mode::kDynac, work / "dynac");
  TrainedModel foc = TrainOne(corpus, train_cfg, Mode::kFinalOnlyCb, work / "final-only-cb");
  summary["train_cpu_seconds"] = {{"plain-ctc", plain.cpu_seconds},
                                  {"dynac", dyn.cpu_seconds},
                                  {"final-only-cb", foc.cpu_seconds}};

  const std::vector<std::string> list50 = EvalBiasList(corpus, kEvalN);
  const EvalReport r_plain = Eval(plain, corpus, list50);
  const EvalReport r_dyn = Eval(dyn, corpus, list50);
  const EvalReport r_foc = Eval(foc, corpus, list50);
  summary["eval_n50"] = {{"plain-ctc", r_plain.ToJson()},
                         {"dynac", r_dyn.ToJson()},
                         {"final-only-cb", r_foc.ToJson()}};

  {
    const bool budget = plain.cpu_seconds <= kTrainCpuSeconds &&
                        dyn.cpu_seconds <= kTrainCpuSeconds;
    const bool bias_ok = Pct(r_dyn.b_wer) <= kBiasRatio * Pct(r_plain.b_wer);
    const bool unbiased_ok = Pct(r_dyn.u_wer) <= Pct(r_plain.u_wer) + kUnbiasedSlack;
    Outcome o;
    o.pass = budget && bias_ok && unbiased_ok;
    o.detail = "N=" + std::to_string(list50.size()) + "; " +
               Describe("plain-ctc", r_plain) + "; " + Describe("dynac", r_dyn) +
               "; need B <= " + Fmt(kBiasRatio * Pct(r_plain.b_wer)) + " and U <= " +
               Fmt(Pct(r_plain.u_wer) + kUnbiasedSlack) + "; train CPU s " +
               Fmt(plain.cpu_seconds) + " / " + Fmt(dyn.cpu_seconds);
    Report("end-to-end biasing", o);
  }
  {
    const bool budget = foc.cpu_seconds <= kTrainCpuSeconds;
    Outcome o;
    o.pass = budget && Pct(r_foc.u_wer) >= kAblationRatio * Pct(r_dyn.u_wer);
    o.detail = Describe("final-only-cb", r_foc) + "; dynac U " + Fmt(Pct(r_dyn.u_wer)) +
               "; need U >= " + Fmt(kAblationRatio * Pct(r_dyn.u_wer)) +
               "; train CPU s " + Fmt(foc.cpu_seconds);
    Report("final-only ablation", o);
  }
  {
    const double rtf_plain = Rtf(plain, corpus, {});
    const double rtf_dyn50 = Rtf(dyn, corpus, list50);
    const double rtf_dyn0 = Rtf(dyn, corpus, {});
    const double ratio = rtf_dyn50 / rtf_plain;
    const double spread = std::abs(rtf_dyn50 - rtf_dyn0) / rtf_dyn0;
    summary["rtf"] = {{"plain-ctc", rtf_plain}, {"dynac_n50", rtf_dyn50},
                      {"dynac_n0", rtf_dyn0}};
    Outcome o;
    o.pass = ratio <= kRtfRatio && spread <= kRtfSpread;
    o.detail = "RTF plain " + Fmt(rtf_plain) + ", dynac N=50 " + Fmt(rtf_dyn50) +
               ", dynac N=0 " + Fmt(rtf_dyn0) + "; ratio " + Fmt(ratio) +
               " (max " + Fmt(kRtfRatio) + "), N spread " + Fmt(spread) + " (max " +
               Fmt(kRtfSpread) + ")";
    Report("rtf overhead", o);
  }
  {
    const auto small = EvalBiasList(corpus, kSweepSmallN, kSweepTargets);
    const auto large = EvalBiasList(corpus, kEvalN, kSweepTargets);
    const EvalReport r_small = Eval(dyn, corpus, small);
    const EvalReport r_large = Eval(dyn, corpus, large);
    summary["sweep"] = {{"n10", r_small.ToJson()}, {"n50", r_large.ToJson()}};
    const bool bias_ok = Pct(r_large.b_wer) <= kSweepBiasGrowth * Pct(r_small.b_wer);
    const bool unbiased_ok =
        std::abs(Pct(r_large.u_wer) - Pct(r_small.u_wer)) <= kSweepUnbiasedSlack;
    Outcome o;
    o.pass = bias_ok && unbiased_ok;
    o.detail = std::to_string(kSweepTargets) + " targets; " +
               Describe("N=10", r_small) + "; " + Describe("N=50", r_large) +
               "; need B50 <= " + Fmt(kSweepBiasGrowth * Pct(r_small.b_wer)) +
               " and |dU| <= " + Fmt(kSweepUnbiasedSlack);
    Report("bias-list size robustness", o);
  }
}

}  // namespace
}  // namespace dynac

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  fs::path work = fs::current_path() / "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--work DIR]\n";
      return 2;
    }
  }
  fs::create_directories(work);
  using dynac::Report;
  Report("ctc oracle", dynac::CtcOracle());
  Report("gradient check", dynac::Gradients());
  Report("parameter count", dynac::ParameterCount());
  Report("mu monotonicity", dynac::MuMonotonicity());
  try {
    dynac::EndToEnd(DYNAC_CONFIG_DIR, work);
  } catch (const std::exception& e) {
    dynac::Report("end-to-end", {false, std::string("aborted: ") + e.what()});
  }
  std::ofstream(work / "acceptance_report.json") << dynac::summary.dump(2) << "\n";
  std::cout << (dynac::failures == 0 ? "ALL PASS" : std::to_string(dynac::failures) +
                                                        " FAILED")
            << std::endl;
  return dynac::failures == 0 ? 0 : 1;
}
