// Copyright 2026 The actrain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitive encoding shared by the FTR1 and ACT1 formats.

#ifndef ACTRAIN_BINARY_IO_H_
#define ACTRAIN_BINARY_IO_H_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace actrain::binary {

template <typename U>
void PutLE(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U GetLE(std::istream& in, const char* what) {
  static_assert(std::is_unsigned_v<U>);
  std::array<unsigned char, sizeof(U)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw std::runtime_error(std::string("truncated input reading ") + what);
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void PutU32(std::ostream& out, std::uint32_t v) { PutLE(out, v); }
inline void PutU64(std::ostream& out, std::uint64_t v) { PutLE(out, v); }
inline void PutF32(std::ostream& out, float v) {
  PutLE(out, std::bit_cast<std::uint32_t>(v));
}
inline void PutF64(std::ostream& out, double v) {
  PutLE(out, std::bit_cast<std::uint64_t>(v));
}
inline void PutString(std::ostream& out, const std::string& s) {
  PutU32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t GetU32(std::istream& in, const char* what) {
  return GetLE<std::uint32_t>(in, what);
}
inline std::uint64_t GetU64(std::istream& in, const char* what) {
  return GetLE<std::uint64_t>(in, what);
}
inline float GetF32(std::istream& in, const char* what) {
  return std::bit_cast<float>(GetLE<std::uint32_t>(in, what));
}
inline double GetF64(std::istream& in, const char* what) {
  return std::bit_cast<double>(GetLE<std::uint64_t>(in, what));
}
inline std::string GetString(std::istream& in, const char* what,
                             std::uint32_t max_len = 1u << 24) {
  const std::uint32_t n = GetU32(in, what);
  if (n > max_len) throw std::runtime_error(std::string("implausible length in ") + what);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::runtime_error(std::string("truncated input reading ") + what);
  }
  return s;
}

}  // namespace actrain::binary

#endif  // ACTRAIN_BINARY_IO_H_
