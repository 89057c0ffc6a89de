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

#ifndef DYNAC_CHECKPOINT_H_
#define DYNAC_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dynac/autodiff.h"
#include "dynac/optimizer.h"

namespace dynac {

// Checkpoint file layout, all integers and doubles little-endian:
//
//   "DYNACKPT"                      8 bytes
//   version                         u32 (currently 1)
//   metadata                        u32 length + UTF-8 JSON
//   parameter count                 u32
//   per parameter:                  u32 name length, name bytes,
//                                   u32 rows, u32 cols, rows*cols f64
//                                   (row-major)
//   optimizer present               u8
//   if present: step i64, u32 count, then per entry the name followed by
//               the m and v matrices in the same matrix encoding.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct CheckpointData {
  nlohmann::json meta;
  std::vector<NamedMatrix> params;
  bool has_optimizer = false;
  std::int64_t optimizer_step = 0;
  std::map<std::string, Adam::Moments> moments;
};

void SaveCheckpoint(const std::string& path, const ParameterRegistry& registry,
                    const nlohmann::json& meta, const Adam* optimizer);
CheckpointData LoadCheckpoint(const std::string& path);

// Copies values into `registry`. Every registry entry must be present with
// the same shape; anything else is an IntegrityError.
void ApplyParameters(const CheckpointData& ckpt, ParameterRegistry& registry);

}  // namespace dynac

#endif  // DYNAC_CHECKPOINT_H_
