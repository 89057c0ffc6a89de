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

// Little-endian primitive encoding shared by checkpoints and feature files.

#ifndef DYNAC_BINARY_IO_H_
#define DYNAC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dynac {

inline void WriteLe(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, bytes);
}

inline std::uint64_t ReadLe(std::istream& is, int bytes) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), bytes);
  if (!is) throw std::runtime_error("unexpected end of binary stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline void WriteU8(std::ostream& os, std::uint8_t v) { WriteLe(os, v, 1); }
inline void WriteU32(std::ostream& os, std::uint32_t v) { WriteLe(os, v, 4); }
inline void WriteI64(std::ostream& os, std::int64_t v) {
  WriteLe(os, static_cast<std::uint64_t>(v), 8);
}
inline void WriteF64(std::ostream& os, double v) {
  WriteLe(os, std::bit_cast<std::uint64_t>(v), 8);
}
inline void WriteString(std::ostream& os, const std::string& s) {
  WriteU32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t ReadU8(std::istream& is) {
  return static_cast<std::uint8_t>(ReadLe(is, 1));
}
inline std::uint32_t ReadU32(std::istream& is) {
  return static_cast<std::uint32_t>(ReadLe(is, 4));
}
inline std::int64_t ReadI64(std::istream& is) {
  return static_cast<std::int64_t>(ReadLe(is, 8));
}
inline double ReadF64(std::istream& is) {
  return std::bit_cast<double>(ReadLe(is, 8));
}
inline std::string ReadString(std::istream& is) {
  std::uint32_t n = ReadU32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("unexpected end of binary stream");
  return s;
}

}  // namespace dynac

#endif  // DYNAC_BINARY_IO_H_
