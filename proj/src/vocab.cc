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

#include "dynac/vocab.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace dynac {

namespace {

const std::string kBoundary = kWordBoundary;

std::string Trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitWhitespace(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

}  // namespace

StaticVocabulary::StaticVocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw ConfigError("static vocabulary is empty");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty() || t == kBlankSymbol) {
      throw ConfigError("invalid static token at id " + std::to_string(i));
    }
    if (!index_.emplace(t, static_cast<int>(i)).second) {
      throw ConfigError("duplicate static token: " + t);
    }
    max_token_bytes_ = std::max(max_token_bytes_, t.size());
  }
}

StaticVocabulary StaticVocabulary::LoadFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return StaticVocabulary(std::move(tokens));
}

void StaticVocabulary::SaveFile(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write vocabulary " + path);
  for (const auto& t : tokens_) os << t << '\n';
}

const std::string& StaticVocabulary::Token(int id) const {
  static const std::string blank = kBlankSymbol;
  if (id == blank_id()) return blank;
  if (id < 0 || id > blank_id()) {
    throw IntegrityError("static id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

std::optional<int> StaticVocabulary::Find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool StaticVocabulary::IsWordInitial(int id) const {
  return id >= 0 && id < size() && tokens_[id].starts_with(kBoundary);
}

std::vector<int> StaticVocabulary::Tokenize(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& word : SplitWhitespace(text)) {
    std::string s = kBoundary + word;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t len = std::min(max_token_bytes_, s.size() - pos);
      for (; len > 0; --len) {
        auto it = index_.find(s.substr(pos, len));
        if (it != index_.end()) {
          ids.push_back(it->second);
          break;
        }
      }
      if (len == 0 || (pos == 0 && len <= kBoundary.size())) {
        throw IntegrityError("cannot spell word '" + word +
                             "' with the static vocabulary");
      }
      pos += len;
    }
  }
  return ids;
}

std::vector<std::string> StaticVocabulary::Detokenize(
    std::span<const int> ids) const {
  std::string text;
  for (int id : ids) {
    if (id < 0 || id >= size()) {
      throw IntegrityError("not a static token id: " + std::to_string(id));
    }
    const std::string& t = tokens_[id];
    if (t.starts_with(kBoundary)) {
      text += ' ';
      text += t.substr(kBoundary.size());
    } else {
      text += t;
    }
  }
  return SplitWhitespace(text);
}

DynamicVocabulary::DynamicVocabulary(const StaticVocabulary& vocab,
                                     std::vector<BiasPhrase> phrases)
    : static_size_(vocab.size()), phrases_(std::move(phrases)) {
  word_initial_.resize(static_size_);
  for (int i = 0; i < static_size_; ++i) word_initial_[i] = vocab.IsWordInitial(i);
  std::set<std::string> seen;
  for (const auto& p : phrases_) {
    if (p.tokens.empty()) {
      throw IntegrityError("bias phrase '" + p.surface + "' has no tokens");
    }
    for (int id : p.tokens) {
      if (id < 0 || id >= static_size_) {
        throw IntegrityError("bias phrase '" + p.surface +
                             "' uses a non-static id");
      }
    }
    if (!seen.insert(p.surface).second) {
      throw IntegrityError("duplicate bias phrase: " + p.surface);
    }
  }
}

DynamicVocabulary DynamicVocabulary::FromSurfaces(
    const StaticVocabulary& vocab, const std::vector<std::string>& surfaces) {
  std::vector<BiasPhrase> phrases;
  phrases.reserve(surfaces.size());
  for (const auto& s : surfaces) {
    std::string norm;
    for (const auto& w : SplitWhitespace(s)) norm += (norm.empty() ? "" : " ") + w;
    phrases.push_back(BiasPhrase{norm, vocab.Tokenize(norm)});
  }
  return DynamicVocabulary(vocab, std::move(phrases));
}

const BiasPhrase& DynamicVocabulary::PhraseForId(int id) const {
  if (!IsDynamic(id)) {
    throw IntegrityError("dangling dynamic id " + std::to_string(id) +
                         " (N=" + std::to_string(N()) + ")");
  }
  return phrases_[id - static_size_ - 1];
}

std::set<std::string> DynamicVocabulary::BiasWords() const {
  std::set<std::string> words;
  for (const auto& p : phrases_) {
    for (auto& w : SplitWhitespace(p.surface)) words.insert(w);
  }
  return words;
}

Transcript RewriteReference(const Transcript& ref, const DynamicVocabulary& dv) {
  if (dv.N() == 0) return ref;
  const int k = dv.static_size();
  std::vector<int> order(dv.N());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dv.phrases()[a].tokens.size() > dv.phrases()[b].tokens.size();
  });
  auto is_static = [k](int id) { return id >= 0 && id < k; };
  Transcript cur = ref;
  for (int n : order) {
    const auto& spell = dv.phrases()[n].tokens;
    const int dyn = dv.DynamicId(n);
    Transcript next;
    next.reserve(cur.size());
    std::size_t i = 0;
    while (i < cur.size()) {
      bool match = i + spell.size() <= cur.size();
      for (std::size_t j = 0; match && j < spell.size(); ++j) {
        match = is_static(cur[i + j]) && cur[i + j] == spell[j];
      }
      if (match) {
        next.push_back(dyn);
        i += spell.size();
      } else {
        next.push_back(cur[i]);
        ++i;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::string> ExpandTranscript(const Transcript& t,
                                          const StaticVocabulary& vocab,
                                          const DynamicVocabulary& dv) {
  // Same word rule as Detokenize; a dynamic token contributes its surface and
  // starts a word when its spelling does.
  std::string text;
  for (int id : t) {
    if (id >= 0 && id < vocab.size()) {
      const std::string& tok = vocab.Token(id);
      if (tok.starts_with(kBoundary)) {
        text += ' ';
        text += tok.substr(kBoundary.size());
      } else {
        text += tok;
      }
    } else if (id == vocab.blank_id()) {
      throw IntegrityError("blank id inside a transcript");
    } else {
      const BiasPhrase& p = dv.PhraseForId(id);
      if (vocab.IsWordInitial(p.tokens.front())) text += ' ';
      text += p.surface;
    }
  }
  return SplitWhitespace(text);
}

std::vector<std::vector<int>> SplitWords(const Transcript& t,
                                         const StaticVocabulary& vocab) {
  std::vector<std::vector<int>> words;
  for (int id : t) {
    if (words.empty() || vocab.IsWordInitial(id)) words.emplace_back();
    words.back().push_back(id);
  }
  return words;
}

DynamicVocabulary SampleBiasList(const std::vector<Transcript>& batch_refs,
                                 const std::vector<std::string>& distractor_pool,
                                 const StaticVocabulary& vocab,
                                 const BiasSamplingOptions& opts, Rng& rng) {
  if (opts.n_min < 0 || opts.n_min > opts.n_max) {
    throw ConfigError("bias list size range must satisfy 0 <= n_min <= n_max");
  }
  if (opts.span_min_words < 1 || opts.span_min_words > opts.span_max_words) {
    throw ConfigError("bias span range must satisfy 1 <= min <= max");
  }
  const int target = rng.UniformInt(opts.n_min, opts.n_max);
  std::set<std::string> taken;
  std::vector<BiasPhrase> positives;
  for (const auto& ref : batch_refs) {
    if (!rng.Bernoulli(opts.positive_prob)) continue;
    auto words = SplitWords(ref, vocab);
    if (words.empty()) continue;
    int max_len = std::min<int>(opts.span_max_words, static_cast<int>(words.size()));
    if (max_len < opts.span_min_words) continue;
    int len = rng.UniformInt(opts.span_min_words, max_len);
    int start = rng.UniformInt(0, static_cast<int>(words.size()) - len);
    BiasPhrase p;
    for (int w = start; w < start + len; ++w) {
      p.tokens.insert(p.tokens.end(), words[w].begin(), words[w].end());
    }
    auto surface_words = vocab.Detokenize(p.tokens);
    for (const auto& w : surface_words) p.surface += (p.surface.empty() ? "" : " ") + w;
    if (taken.insert(p.surface).second) positives.push_back(std::move(p));
  }
  rng.Shuffle(positives);
  if (static_cast<int>(positives.size()) > target) positives.resize(target);
  std::set<std::string> kept;
  for (const auto& p : positives) kept.insert(p.surface);

  std::vector<BiasPhrase> phrases = std::move(positives);
  std::vector<std::size_t> order(distractor_pool.size());
  std::iota(order.begin(), order.end(), 0);
  rng.Shuffle(order);
  for (std::size_t i = 0;
       i < order.size() && static_cast<int>(phrases.size()) < target; ++i) {
    const std::string& s = distractor_pool[order[i]];
    if (kept.count(s)) continue;
    kept.insert(s);
    phrases.push_back(BiasPhrase{s, vocab.Tokenize(s)});
  }
  if (static_cast<int>(phrases.size()) < opts.n_min) {
    std::cerr << "warning: bias list has " << phrases.size()
              << " phrases, fewer than n_min=" << opts.n_min << "\n";
  }
  rng.Shuffle(phrases);
  return DynamicVocabulary(vocab, std::move(phrases));
}

std::vector<std::string> LoadBiasListFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open bias list " + path);
  std::vector<std::string> phrases;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    phrases.push_back(t);
  }
  return phrases;
}

void SaveBiasListFile(const std::string& path,
                      const std::vector<std::string>& phrases) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write bias list " + path);
  for (const auto& p : phrases) os << p << '\n';
}

}  // namespace dynac
