#pragma once
// Deterministic 64-bit generator (splitmix64). Every random draw in the
// project goes through this class so runs are reproducible bit for bit.

#include <cstdint>

namespace bvcast {

// One splitmix64 finalizer round. Also used as the mixing step for content
// hashes and derived seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Splitmix64 {
 public:
  explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform value in [0, bound). Fixed-point scaling keeps the mapping
  // identical on every platform; bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  // Derived generator for an independent substream.
  Splitmix64 split(std::uint64_t salt) const {
    return Splitmix64(mix64(state_ ^ mix64(salt)));
  }

 private:
  std::uint64_t state_;
};

}  // namespace bvcast
