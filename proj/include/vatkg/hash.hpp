#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace vatkg {

// 64-bit FNV-1a. Used for triplet ids, index checksums and mock seeds.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  constexpr void update(std::span<const unsigned char> bytes) noexcept {
    for (unsigned char b : bytes) {
      state_ ^= b;
      state_ *= kPrime;
    }
  }
  constexpr void update(std::string_view text) noexcept {
    for (char c : text) {
      state_ ^= static_cast<unsigned char>(c);
      state_ *= kPrime;
    }
  }
  constexpr std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text);
  return h.digest();
}

/// splitmix64 generator; next() advances and returns the mixed word.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Lowercase, zero-padded 16-digit hex.
std::string to_hex16(std::uint64_t value);

}  // namespace vatkg
