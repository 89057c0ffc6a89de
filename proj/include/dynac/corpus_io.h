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

#ifndef DYNAC_CORPUS_IO_H_
#define DYNAC_CORPUS_IO_H_

#include <string>
#include <vector>

#include "dynac/synthdata.h"

namespace dynac {

// Feature file, little-endian:
//
//   "DYNF"        4 bytes
//   version       u32 (currently 1)
//   rows, cols    u32, u32
//   values        rows*cols f64, row-major
inline constexpr std::uint32_t kFeatureVersion = 1;

void WriteFeatures(const std::string& path, const Matrix& features);
Matrix ReadFeatures(const std::string& path);

// Corpus directory layout:
//
//   spec.json            generator spec
//   vocab.txt            static tokens, one per line, id = line number
//   words.txt            word inventory
//   unseen.txt           words absent from training references
//   distractors.txt      words never spoken
//   {train,test}/manifest.tsv   id <TAB> token ids <TAB> words
//   {train,test}/feats/<id>.feat
void SaveCorpus(const Corpus& corpus, const std::string& dir);
Corpus LoadCorpus(const std::string& dir);

// One manifest row per utterance; features are not touched.
void WriteManifest(const std::string& path, const std::vector<Utterance>& utts);

std::vector<std::string> ReadLines(const std::string& path);
void WriteLines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace dynac

#endif  // DYNAC_CORPUS_IO_H_
