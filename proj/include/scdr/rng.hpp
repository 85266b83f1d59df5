#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace scdr {

// splitmix64 finalizer; derives independent deterministic streams from
// (seed, stream-tag) pairs so that every consumer owns its own randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream ^ 0xA5A5A5A5A5A5A5A5ull));
}

inline std::mt19937 make_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t mixed = mix_seed(seed, stream);
  return std::mt19937(static_cast<std::uint32_t>(mixed) ^
                      static_cast<std::uint32_t>(mixed >> 32));
}

// Stream tags. Epoch streams are kStreamEpochBase + epoch.
enum StreamTag : std::uint64_t {
  kStreamInit = 1,
  kStreamDataTrain = 2,
  kStreamDataTest = 3,
  kStreamKshot = 4,
  kStreamChips = 5,
  kStreamEpochBase = 1u << 20,
};

inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t h = 0xCBF29CE484222325ull) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace scdr
