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

#include "dynac/corpus_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynac/binary_io.h"

namespace dynac {

namespace fs = std::filesystem;

namespace {

constexpr char kFeatureMagic[4] = {'D', 'Y', 'N', 'F'};

std::string Join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

std::vector<std::string> SplitSpaces(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::vector<Utterance> LoadSplit(const fs::path& dir, int K, int d_in) {
  std::vector<Utterance> utts;
  int line_no = 0;
  for (const auto& line : ReadLines((dir / "manifest.tsv").string())) {
    ++line_no;
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw IntegrityError((dir / "manifest.tsv").string() + ":" +
                           std::to_string(line_no) + ": expected 3 fields");
    }
    Utterance u;
    u.id = line.substr(0, tab1);
    for (const auto& tok : SplitSpaces(line.substr(tab1 + 1, tab2 - tab1 - 1))) {
      int id = std::stoi(tok);
      if (id < 0 || id >= K) {
        throw IntegrityError("token id " + tok + " outside static vocabulary in " + u.id);
      }
      u.reference.push_back(id);
    }
    u.words = SplitSpaces(line.substr(tab2 + 1));
    u.features = ReadFeatures((dir / "feats" / (u.id + ".feat")).string());
    if (u.features.cols() != d_in) {
      throw IntegrityError("feature width mismatch in " + u.id);
    }
    utts.push_back(std::move(u));
  }
  return utts;
}

}  // namespace

void WriteFeatures(const std::string& path, const Matrix& features) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kFeatureMagic, 4);
  WriteU32(os, kFeatureVersion);
  WriteU32(os, static_cast<std::uint32_t>(features.rows()));
  WriteU32(os, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.size(); ++i) WriteF64(os, features.data()[i]);
  if (!os) throw std::runtime_error("short write on " + path);
}

Matrix ReadFeatures(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kFeatureMagic)) {
    throw IntegrityError(path + " is not a feature file");
  }
  if (ReadU32(is) != kFeatureVersion) {
    throw IntegrityError("unsupported feature file version in " + path);
  }
  std::uint32_t rows = ReadU32(is);
  std::uint32_t cols = ReadU32(is);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = ReadF64(is);
  return m;
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void WriteLines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) os << l << '\n';
}

void WriteManifest(const std::string& path, const std::vector<Utterance>& utts) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& u : utts) {
    os << u.id << '\t';
    for (std::size_t i = 0; i < u.reference.size(); ++i) {
      os << (i ? " " : "") << u.reference[i];
    }
    os << '\t' << Join(u.words) << '\n';
  }
}

void SaveCorpus(const Corpus& corpus, const std::string& dir) {
  fs::path root(dir);
  fs::create_directories(root);
  {
    std::ofstream os(root / "spec.json", std::ios::trunc);
    os << corpus.spec.ToJson().dump(2) << '\n';
  }
  corpus.vocab.SaveFile((root / "vocab.txt").string());
  WriteLines((root / "words.txt").string(), corpus.inventory);
  WriteLines((root / "unseen.txt").string(), corpus.unseen_words);
  WriteLines((root / "distractors.txt").string(), corpus.distractors);
  for (const auto& [name, utts] : {std::pair{"train", &corpus.train},
                                   std::pair{"test", &corpus.test}}) {
    fs::path split = root / name;
    fs::create_directories(split / "feats");
    WriteManifest((split / "manifest.tsv").string(), *utts);
    for (const auto& u : *utts) {
      WriteFeatures((split / "feats" / (u.id + ".feat")).string(), u.features);
    }
  }
}

Corpus LoadCorpus(const std::string& dir) {
  fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error("no corpus directory " + dir);
  Corpus c;
  {
    std::ifstream is(root / "spec.json");
    if (!is) throw std::runtime_error("missing spec.json in " + dir);
    c.spec = CorpusSpec::FromJson(nlohmann::json::parse(is));
  }
  c.vocab = StaticVocabulary::LoadFile((root / "vocab.txt").string());
  if (c.vocab.size() != c.spec.K) {
    throw IntegrityError("vocab.txt size disagrees with spec.json K");
  }
  c.inventory = ReadLines((root / "words.txt").string());
  c.unseen_words = ReadLines((root / "unseen.txt").string());
  c.distractors = ReadLines((root / "distractors.txt").string());
  c.train = LoadSplit(root / "train", c.spec.K, c.spec.d_in);
  c.test = LoadSplit(root / "test", c.spec.K, c.spec.d_in);
  return c;
}

}  // namespace dynac
