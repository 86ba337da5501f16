#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace hybridrag {

/// 64-bit FNV-1a. Used for provenance fingerprints and cache keys, where a
/// stable, platform-independent value matters more than collision strength.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kPrime;
    }
    return *this;
  }

  Fnv1a& update_char(char c) { return update(std::string_view(&c, 1)); }

  std::uint64_t digest() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 14695981039346656037ULL;
  static constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a(std::string_view bytes) { return Fnv1a{}.update(bytes).digest(); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace hybridrag
