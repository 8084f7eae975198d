// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace cropdrqn {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xCBF29CE484222325ull) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace cropdrqn
