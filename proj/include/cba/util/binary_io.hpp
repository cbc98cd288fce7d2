// Copyright (c) 2026 The CBA Authors
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

#ifndef CBA_UTIL_BINARY_IO_HPP_
#define CBA_UTIL_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace cba::io {

template <typename T>
  requires std::is_unsigned_v<T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(v & 0xFF);
    if constexpr (sizeof(T) > 1) v = static_cast<T>(v >> 8);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
  requires std::is_unsigned_v<T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("binary stream truncated");
  T v = 0;
  for (std::size_t i = sizeof(T); i > 0; --i) {
    if constexpr (sizeof(T) > 1) v = static_cast<T>(v << 8);
    v = static_cast<T>(v | buf[i - 1]);
  }
  return v;
}

inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get_le<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("binary stream truncated");
  return s;
}

}  // namespace cba::io

#endif  // CBA_UTIL_BINARY_IO_HPP_
