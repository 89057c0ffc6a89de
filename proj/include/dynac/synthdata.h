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

#ifndef DYNAC_SYNTHDATA_H_
#define DYNAC_SYNTHDATA_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynac/autodiff.h"
#include "dynac/vocab.h"

namespace dynac {

// Synthetic corpus: words are strings of consonant-vowel syllables, each
// syllable has a word-initial and a word-internal static token (K/2 of each),
// and every token is rendered as a few noisy copies of a fixed prototype
// vector.
struct CorpusSpec {
  int K = 40;
  int d_in = 16;
  int frames_min = 2;
  int frames_max = 4;
  double noise_sigma = 0.3;
  // Per-dimension standard deviation of token prototypes.
  double prototype_scale = 0.25;
  int inventory_size = 120;
  int syllables_min = 2;
  int syllables_max = 3;
  int words_min = 3;
  int words_max = 8;
  int train_size = 2000;
  int test_size = 200;
  double unseen_fraction = 0.25;
  // Novel words that never occur in any utterance.
  int distractor_pool_size = 100;
  // Skew of the training word distribution (0 = uniform).
  double zipf_exponent = 0.8;
  std::uint64_t seed = 7;

  void Validate() const;
  nlohmann::json ToJson() const;
  static CorpusSpec FromJson(const nlohmann::json& j);
};

struct Utterance {
  std::string id;
  Matrix features;      // T x d_in
  Transcript reference;  // static ids only
  std::vector<std::string> words;
};

struct Corpus {
  CorpusSpec spec;
  StaticVocabulary vocab;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  std::vector<std::string> inventory;    // every word, seen or unseen
  std::vector<std::string> unseen_words;  // test-only words
  std::vector<std::string> distractors;   // never spoken
};

Corpus Generate(const CorpusSpec& spec);

// Static vocabulary used by the generator for a given K.
StaticVocabulary SyllableVocabulary(int K);

// Exact occurrence count of each word of `words` in the references.
std::map<std::string, long> OccurrenceHistogram(
    const std::vector<Utterance>& corpus, const std::vector<std::string>& words);

}  // namespace dynac

#endif  // DYNAC_SYNTHDATA_H_
