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

#ifndef DYNAC_VOCAB_H_
#define DYNAC_VOCAB_H_

#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynac/autodiff.h"
#include "dynac/rng.h"

namespace dynac {

// Prefix marking a word-initial token, as in SentencePiece ("▁").
inline constexpr const char* kWordBoundary = "\xe2\x96\x81";
inline constexpr const char* kBlankSymbol = "<blank>";

// Token ids over the expanded vocabulary:
//   [0, K)          static tokens
//   K               blank
//   [K+1, K+1+N)    dynamic tokens, one per bias phrase
// This is also the column layout of every score and probability grid.
using Transcript = std::vector<int>;

class StaticVocabulary {
 public:
  StaticVocabulary() = default;
  explicit StaticVocabulary(std::vector<std::string> tokens);

  // One token per line; line number (0-based) is the id.
  static StaticVocabulary LoadFile(const std::string& path);
  void SaveFile(const std::string& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank_id() const { return size(); }
  const std::string& Token(int id) const;
  std::optional<int> Find(const std::string& token) const;
  bool IsWordInitial(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Greedy longest-match spelling of whitespace-separated words; each word
  // is looked up with the boundary prefix. Throws IntegrityError if a word
  // cannot be spelled.
  std::vector<int> Tokenize(const std::string& text) const;
  // Word rule: concatenate tokens, the boundary prefix starts a new word.
  std::vector<std::string> Detokenize(std::span<const int> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_token_bytes_ = 0;
};

struct BiasPhrase {
  std::string surface;
  std::vector<int> tokens;
};

class DynamicVocabulary {
 public:
  DynamicVocabulary() = default;
  // Checks: non-empty spellings, ids < K, unique surfaces.
  DynamicVocabulary(const StaticVocabulary& vocab,
                    std::vector<BiasPhrase> phrases);

  static DynamicVocabulary FromSurfaces(const StaticVocabulary& vocab,
                                        const std::vector<std::string>& surfaces);

  int N() const { return static_cast<int>(phrases_.size()); }
  int static_size() const { return static_size_; }
  int DynamicId(int n) const { return static_size_ + 1 + n; }
  bool IsDynamic(int id) const {
    return id > static_size_ && id <= static_size_ + N();
  }
  const BiasPhrase& PhraseForId(int id) const;
  // Whether static id `id` begins a word; false for non-static ids.
  bool StartsWord(int id) const {
    return id >= 0 && id < static_size_ && word_initial_[id];
  }
  const std::vector<BiasPhrase>& phrases() const { return phrases_; }
  // Every word that occurs in some bias phrase.
  std::set<std::string> BiasWords() const;

 private:
  int static_size_ = 0;
  std::vector<bool> word_initial_;
  std::vector<BiasPhrase> phrases_;
};

// Replaces occurrences of bias phrase spellings by their dynamic
// ids. Phrases are applied longest first (ties in list order), each scanning
// left to right over static tokens only, so replacements never overlap.
Transcript RewriteReference(const Transcript& ref, const DynamicVocabulary& dv);

// Maps a transcript over static and dynamic ids to words. Static pieces
// following a dynamic token without a boundary prefix extend its last word, so
// ExpandTranscript(RewriteReference(x)) equals ExpandTranscript(x). Throws
// IntegrityError on ids outside the vocabulary.
std::vector<std::string> ExpandTranscript(const Transcript& t,
                                          const StaticVocabulary& vocab,
                                          const DynamicVocabulary& dv);

// Splits a static transcript into words, returned as token spans.
std::vector<std::vector<int>> SplitWords(const Transcript& t,
                                         const StaticVocabulary& vocab);

struct BiasSamplingOptions {
  int n_min = 5;
  int n_max = 20;
  int span_min_words = 1;
  int span_max_words = 3;
  // Chance that an utterance contributes a positive span.
  double positive_prob = 1.0;
};

// Draws a training bias list: at most one positive span per utterance, then
// distractors from `distractor_pool` until the target size drawn from
// [n_min, n_max] is reached. The result is shuffled.
DynamicVocabulary SampleBiasList(const std::vector<Transcript>& batch_refs,
                                 const std::vector<std::string>& distractor_pool,
                                 const StaticVocabulary& vocab,
                                 const BiasSamplingOptions& opts, Rng& rng);

// UTF-8 text, one phrase per line. Lines starting with '#' and blank lines are
// skipped; surrounding whitespace is trimmed.
std::vector<std::string> LoadBiasListFile(const std::string& path);
void SaveBiasListFile(const std::string& path,
                      const std::vector<std::string>& phrases);

}  // namespace dynac

#endif  // DYNAC_VOCAB_H_
