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

#include "dynac/checkpoint.h"

#include <fstream>

#include "dynac/binary_io.h"

namespace dynac {

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'A', 'C', 'K', 'P', 'T'};

void WriteMatrix(std::ostream& os, const Matrix& m) {
  WriteU32(os, static_cast<std::uint32_t>(m.rows()));
  WriteU32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) WriteF64(os, m.data()[i]);
}

Matrix ReadMatrix(std::istream& is) {
  std::uint32_t rows = ReadU32(is);
  std::uint32_t cols = ReadU32(is);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = ReadF64(is);
  return m;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const ParameterRegistry& registry,
                    const nlohmann::json& meta, const Adam* optimizer) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os.write(kMagic, sizeof(kMagic));
  WriteU32(os, kCheckpointVersion);
  WriteString(os, meta.dump());
  WriteU32(os, static_cast<std::uint32_t>(registry.size()));
  for (const auto& p : registry.params()) {
    WriteString(os, p->name);
    WriteMatrix(os, p->value);
  }
  WriteU8(os, optimizer ? 1 : 0);
  if (optimizer) {
    WriteI64(os, optimizer->step());
    WriteU32(os, static_cast<std::uint32_t>(optimizer->state().size()));
    for (const auto& [name, mom] : optimizer->state()) {
      WriteString(os, name);
      WriteMatrix(os, mom.m);
      WriteMatrix(os, mom.v);
    }
  }
  if (!os) throw std::runtime_error("short write on checkpoint " + path);
}

CheckpointData LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + 8, kMagic)) {
    throw IntegrityError(path + " is not a checkpoint");
  }
  std::uint32_t version = ReadU32(is);
  if (version != kCheckpointVersion) {
    throw IntegrityError("unsupported checkpoint version " +
                         std::to_string(version));
  }
  CheckpointData ckpt;
  ckpt.meta = nlohmann::json::parse(ReadString(is));
  std::uint32_t count = ReadU32(is);
  ckpt.params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedMatrix nm;
    nm.name = ReadString(is);
    nm.value = ReadMatrix(is);
    ckpt.params.push_back(std::move(nm));
  }
  ckpt.has_optimizer = ReadU8(is) != 0;
  if (ckpt.has_optimizer) {
    ckpt.optimizer_step = ReadI64(is);
    std::uint32_t n = ReadU32(is);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string name = ReadString(is);
      Adam::Moments mom;
      mom.m = ReadMatrix(is);
      mom.v = ReadMatrix(is);
      ckpt.moments.emplace(std::move(name), std::move(mom));
    }
  }
  return ckpt;
}

void ApplyParameters(const CheckpointData& ckpt, ParameterRegistry& registry) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& nm : ckpt.params) by_name[nm.name] = &nm.value;
  if (by_name.size() != registry.size()) {
    throw IntegrityError("checkpoint holds " + std::to_string(by_name.size()) +
                         " parameters, model expects " +
                         std::to_string(registry.size()));
  }
  for (const auto& p : registry.params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw IntegrityError("checkpoint lacks parameter " + p->name);
    }
    if (it->second->rows() != p->value.rows() ||
        it->second->cols() != p->value.cols()) {
      throw IntegrityError("shape mismatch for " + p->name + ": checkpoint " +
                           ShapeString(*it->second) + ", model " +
                           ShapeString(p->value));
    }
    p->value = *it->second;
  }
}

}  // namespace dynac
