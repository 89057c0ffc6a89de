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

#include "dynac/synthdata.h"

#include <cmath>
#include <cstdio>
#include <set>

#include "dynac/rng.h"

namespace dynac {

namespace {

constexpr const char* kConsonants = "kmrstnpgbdhlwyzfvjc";
constexpr const char* kVowels = "aiueo";

std::vector<std::string> Syllables(int count) {
  std::vector<std::string> out;
  for (const char* c = kConsonants; *c && static_cast<int>(out.size()) < count; ++c) {
    for (const char* v = kVowels; *v && static_cast<int>(out.size()) < count; ++v) {
      out.push_back(std::string{*c, *v});
    }
  }
  return out;
}

std::string UtteranceId(const char* split, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05d", split, i);
  return buf;
}

}  // namespace

void CorpusSpec::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("corpus spec: " + m); };
  if (K <= 0 || K % 2 != 0) fail("K must be positive and even");
  if (K / 2 > 95) fail("K/2 exceeds the 95 available syllables");
  if (d_in <= 0) fail("d_in must be positive");
  if (frames_min < 1 || frames_min > frames_max) fail("bad frames-per-token range");
  if (noise_sigma < 0.0 || prototype_scale <= 0.0) fail("bad noise or prototype scale");
  if (syllables_min < 1 || syllables_min > syllables_max) fail("bad syllable range");
  if (words_min < 1 || words_min > words_max) fail("bad words-per-utterance range");
  if (train_size < 0 || test_size < 0) fail("negative corpus size");
  if (unseen_fraction < 0.0 || unseen_fraction >= 1.0) fail("unseen_fraction must be in [0, 1)");
  if (inventory_size < 1) fail("inventory must hold at least one word");
  const long unseen = std::lround(unseen_fraction * inventory_size);
  if (unseen >= inventory_size) fail("inventory too small for the unseen fraction");
  if (distractor_pool_size < 0) fail("negative distractor pool");
  // Crude capacity check on distinct syllable strings.
  double capacity = 0.0;
  for (int s = syllables_min; s <= syllables_max; ++s) capacity += std::pow(K / 2, s);
  if (capacity < 2.0 * (inventory_size + distractor_pool_size)) {
    fail("too few syllables for the requested inventory");
  }
}

nlohmann::json CorpusSpec::ToJson() const {
  return nlohmann::json{{"K", K},
                        {"d_in", d_in},
                        {"frames_min", frames_min},
                        {"frames_max", frames_max},
                        {"noise_sigma", noise_sigma},
                        {"prototype_scale", prototype_scale},
                        {"inventory_size", inventory_size},
                        {"syllables_min", syllables_min},
                        {"syllables_max", syllables_max},
                        {"words_min", words_min},
                        {"words_max", words_max},
                        {"train_size", train_size},
                        {"test_size", test_size},
                        {"unseen_fraction", unseen_fraction},
                        {"distractor_pool_size", distractor_pool_size},
                        {"zipf_exponent", zipf_exponent},
                        {"seed", seed}};
}

CorpusSpec CorpusSpec::FromJson(const nlohmann::json& j) {
  CorpusSpec s;
  for (const auto& [key, v] : j.items()) {
    if (key == "K") s.K = v.get<int>();
    else if (key == "d_in") s.d_in = v.get<int>();
    else if (key == "frames_min") s.frames_min = v.get<int>();
    else if (key == "frames_max") s.frames_max = v.get<int>();
    else if (key == "noise_sigma") s.noise_sigma = v.get<double>();
    else if (key == "prototype_scale") s.prototype_scale = v.get<double>();
    else if (key == "inventory_size") s.inventory_size = v.get<int>();
    else if (key == "syllables_min") s.syllables_min = v.get<int>();
    else if (key == "syllables_max") s.syllables_max = v.get<int>();
    else if (key == "words_min") s.words_min = v.get<int>();
    else if (key == "words_max") s.words_max = v.get<int>();
    else if (key == "train_size") s.train_size = v.get<int>();
    else if (key == "test_size") s.test_size = v.get<int>();
    else if (key == "unseen_fraction") s.unseen_fraction = v.get<double>();
    else if (key == "distractor_pool_size") s.distractor_pool_size = v.get<int>();
    else if (key == "zipf_exponent") s.zipf_exponent = v.get<double>();
    else if (key == "seed") s.seed = v.get<std::uint64_t>();
    else throw ConfigError("unknown corpus spec key: " + key);
  }
  s.Validate();
  return s;
}

StaticVocabulary SyllableVocabulary(int K) {
  auto syl = Syllables(K / 2);
  std::vector<std::string> tokens;
  for (const auto& s : syl) tokens.push_back(std::string(kWordBoundary) + s);
  for (const auto& s : syl) tokens.push_back(s);
  return StaticVocabulary(std::move(tokens));
}

Corpus Generate(const CorpusSpec& spec) {
  spec.Validate();
  Rng rng(spec.seed);
  Corpus c;
  c.spec = spec;
  c.vocab = SyllableVocabulary(spec.K);
  const auto syl = Syllables(spec.K / 2);

  std::set<std::string> used;
  auto new_word = [&]() {
    for (;;) {
      int n = rng.UniformInt(spec.syllables_min, spec.syllables_max);
      std::string w;
      for (int i = 0; i < n; ++i) w += syl[rng.UniformInt(0, static_cast<int>(syl.size()) - 1)];
      if (used.insert(w).second) return w;
    }
  };
  for (int i = 0; i < spec.inventory_size; ++i) c.inventory.push_back(new_word());
  for (int i = 0; i < spec.distractor_pool_size; ++i) c.distractors.push_back(new_word());

  const int n_unseen = static_cast<int>(std::lround(spec.unseen_fraction * spec.inventory_size));
  std::vector<int> order(spec.inventory_size);
  for (int i = 0; i < spec.inventory_size; ++i) order[i] = i;
  rng.Shuffle(order);
  std::vector<std::string> seen;
  for (int i = 0; i < spec.inventory_size; ++i) {
    const std::string& w = c.inventory[order[i]];
    if (i < n_unseen) c.unseen_words.push_back(w);
    else seen.push_back(w);
  }
  // Zipf weights over a random ranking of the seen words.
  std::vector<double> seen_weights(seen.size());
  for (std::size_t r = 0; r < seen.size(); ++r) {
    seen_weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
  }

  Matrix prototypes(spec.K, spec.d_in);
  for (Eigen::Index i = 0; i < prototypes.size(); ++i) {
    prototypes.data()[i] = rng.Normal(0.0, spec.prototype_scale);
  }

  auto render = [&](const std::string& id, std::vector<std::string> words) {
    Utterance u;
    u.id = id;
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    u.reference = c.vocab.Tokenize(text);
    u.words = std::move(words);
    std::vector<int> frames(u.reference.size());
    int T = 0;
    for (auto& f : frames) {
      f = rng.UniformInt(spec.frames_min, spec.frames_max);
      T += f;
    }
    u.features.resize(T, spec.d_in);
    int t = 0;
    for (std::size_t k = 0; k < u.reference.size(); ++k) {
      for (int r = 0; r < frames[k]; ++r, ++t) {
        for (int j = 0; j < spec.d_in; ++j) {
          u.features(t, j) = prototypes(u.reference[k], j) +
                             (spec.noise_sigma > 0.0 ? rng.Normal(0.0, spec.noise_sigma) : 0.0);
        }
      }
    }
    return u;
  };

  for (int i = 0; i < spec.train_size; ++i) {
    int n = rng.UniformInt(spec.words_min, spec.words_max);
    std::vector<std::string> words;
    for (int k = 0; k < n; ++k) words.push_back(seen[rng.Categorical(seen_weights)]);
    c.train.push_back(render(UtteranceId("train", i), std::move(words)));
  }
  for (int i = 0; i < spec.test_size; ++i) {
    int n = rng.UniformInt(spec.words_min, spec.words_max);
    std::vector<std::string> words;
    for (int k = 0; k < n; ++k) {
      if (n_unseen > 0 && rng.Bernoulli(spec.unseen_fraction)) {
        words.push_back(c.unseen_words[rng.UniformInt(0, n_unseen - 1)]);
      } else {
        words.push_back(seen[rng.Categorical(seen_weights)]);
      }
    }
    c.test.push_back(render(UtteranceId("test", i), std::move(words)));
  }
  return c;
}

std::map<std::string, long> OccurrenceHistogram(
    const std::vector<Utterance>& corpus, const std::vector<std::string>& words) {
  std::map<std::string, long> counts;
  for (const auto& w : words) counts[w] = 0;
  for (const auto& u : corpus) {
    for (const auto& w : u.words) {
      auto it = counts.find(w);
      if (it != counts.end()) ++it->second;
    }
  }
  return counts;
}

}  // namespace dynac
