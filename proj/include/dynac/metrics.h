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

#ifndef DYNAC_METRICS_H_
#define DYNAC_METRICS_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace dynac {

using WordSeq = std::vector<std::string>;

struct ErrorCount {
  long errors = 0;
  long ref_words = 0;

  // Percentage; nullopt when there are no reference words.
  std::optional<double> Percent() const {
    if (ref_words <= 0) return std::nullopt;
    return 100.0 * static_cast<double>(errors) / static_cast<double>(ref_words);
  }
  ErrorCount& operator+=(const ErrorCount& o) {
    errors += o.errors;
    ref_words += o.ref_words;
    return *this;
  }
};

enum class EditOp { kMatch, kSubstitution, kDeletion, kInsertion };

struct AlignedPair {
  EditOp op;
  std::string ref;  // empty for insertions
  std::string hyp;  // empty for deletions
};

// Minimum-edit alignment. Among equal-cost alignments the backtrace prefers
// match/substitution, then deletion, then insertion.
std::vector<AlignedPair> AlignWords(const WordSeq& ref, const WordSeq& hyp);

struct EvalReport {
  ErrorCount wer;
  ErrorCount u_wer;
  ErrorCount b_wer;
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long utterances = 0;
  // Errors and reference counts per bias word, for frequency binning.
  std::map<std::string, ErrorCount> per_bias_word;
  std::optional<double> rtf;

  nlohmann::json ToJson() const;
};

// Word error rate split by bias membership. Substitutions and deletions count
// against B-WER when the reference word is a bias word, insertions when the
// inserted word is. Throws std::invalid_argument on an empty reference corpus
// or mismatched sizes.
EvalReport WerSplit(const std::vector<WordSeq>& refs,
                    const std::vector<WordSeq>& hyps,
                    const std::set<std::string>& bias_words);

struct OccurrenceBin {
  long lo = 0;
  long hi = 0;  // inclusive; negative means unbounded
  ErrorCount b_wer;
  long words = 0;  // distinct bias words in the bin
};

// Bins B-WER by how often each bias word occurs in training references.
std::vector<OccurrenceBin> BinByOccurrence(
    const EvalReport& report, const std::map<std::string, long>& train_counts,
    const std::vector<std::pair<long, long>>& edges);

nlohmann::json ToJson(const ErrorCount& c);
nlohmann::json ToJson(const std::vector<OccurrenceBin>& bins);

}  // namespace dynac

#endif  // DYNAC_METRICS_H_
