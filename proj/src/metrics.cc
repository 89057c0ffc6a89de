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

#include "dynac/metrics.h"

#include <algorithm>
#include <stdexcept>

namespace dynac {

std::vector<AlignedPair> AlignWords(const WordSeq& ref, const WordSeq& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::vector<int>> cost(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) cost[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      int diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i - 1][j] + 1, cost[i][j - 1] + 1});
    }
  }
  std::vector<AlignedPair> out;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool same = ref[i - 1] == hyp[j - 1];
      if (cost[i][j] == cost[i - 1][j - 1] + (same ? 0 : 1)) {
        out.push_back({same ? EditOp::kMatch : EditOp::kSubstitution,
                       ref[i - 1], hyp[j - 1]});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
      out.push_back({EditOp::kDeletion, ref[i - 1], ""});
      --i;
    } else {
      out.push_back({EditOp::kInsertion, "", hyp[j - 1]});
      --j;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

EvalReport WerSplit(const std::vector<WordSeq>& refs,
                    const std::vector<WordSeq>& hyps,
                    const std::set<std::string>& bias_words) {
  if (refs.size() != hyps.size()) {
    throw std::invalid_argument("reference and hypothesis counts differ");
  }
  EvalReport r;
  r.utterances = static_cast<long>(refs.size());
  for (std::size_t u = 0; u < refs.size(); ++u) {
    for (const auto& w : refs[u]) {
      bool bias = bias_words.count(w) > 0;
      ++r.wer.ref_words;
      ++(bias ? r.b_wer : r.u_wer).ref_words;
      if (bias) ++r.per_bias_word[w].ref_words;
    }
    for (const auto& p : AlignWords(refs[u], hyps[u])) {
      if (p.op == EditOp::kMatch) continue;
      const std::string& key = p.op == EditOp::kInsertion ? p.hyp : p.ref;
      bool bias = bias_words.count(key) > 0;
      ++r.wer.errors;
      ++(bias ? r.b_wer : r.u_wer).errors;
      if (bias) ++r.per_bias_word[key].errors;
      switch (p.op) {
        case EditOp::kSubstitution:
          ++r.substitutions;
          break;
        case EditOp::kDeletion:
          ++r.deletions;
          break;
        case EditOp::kInsertion:
          ++r.insertions;
          break;
        default:
          break;
      }
    }
  }
  if (r.wer.ref_words == 0) {
    throw std::invalid_argument("empty reference corpus");
  }
  return r;
}

std::vector<OccurrenceBin> BinByOccurrence(
    const EvalReport& report, const std::map<std::string, long>& train_counts,
    const std::vector<std::pair<long, long>>& edges) {
  std::vector<OccurrenceBin> bins;
  for (const auto& [lo, hi] : edges) bins.push_back({lo, hi, {}, 0});
  for (const auto& [word, count] : report.per_bias_word) {
    auto it = train_counts.find(word);
    long occ = it == train_counts.end() ? 0 : it->second;
    for (auto& b : bins) {
      if (occ >= b.lo && (b.hi < 0 || occ <= b.hi)) {
        b.b_wer += count;
        ++b.words;
        break;
      }
    }
  }
  return bins;
}

nlohmann::json ToJson(const ErrorCount& c) {
  nlohmann::json j{{"errors", c.errors}, {"ref_words", c.ref_words}};
  auto p = c.Percent();
  j["percent"] = p ? nlohmann::json(*p) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ToJson(const std::vector<OccurrenceBin>& bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bins) {
    arr.push_back({{"min_occurrences", b.lo},
                   {"max_occurrences", b.hi < 0 ? nlohmann::json(nullptr)
                                                : nlohmann::json(b.hi)},
                   {"words", b.words},
                   {"b_wer", ToJson(b.b_wer)}});
  }
  return arr;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json j{{"utterances", utterances},
                   {"wer", dynac::ToJson(wer)},
                   {"u_wer", dynac::ToJson(u_wer)},
                   {"b_wer", dynac::ToJson(b_wer)},
                   {"substitutions", substitutions},
                   {"deletions", deletions},
                   {"insertions", insertions}};
  j["rtf"] = rtf ? nlohmann::json(*rtf) : nlohmann::json(nullptr);
  return j;
}

}  // namespace dynac
