#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mpsumm {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over the raw bytes of `bytes`, starting from `basis`.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = kFnvOffsetBasis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// Lowercase, zero-padded 16-digit hex rendering of a 64-bit hash.
std::string hex64(std::uint64_t value);

/// Content key used by the precomputed-score file: hex64(fnv1a64(text)).
std::string content_key(std::string_view text);

/// Content key of a text pair; the parts are joined with U+001F (unit separator).
std::string content_key(std::string_view first, std::string_view second);

}  // namespace mpsumm
