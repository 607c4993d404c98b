#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Platform-stable hashing and RNG primitives. std::hash and the standard
// <random> distributions are implementation-defined, so everything that feeds
// a persisted artifact or a replay fingerprint goes through these instead.

namespace graphrank {

constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffsetBasis) {
    std::uint64_t h = seed;
    for (char c : data) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

/// 16-char lowercase hex rendering, used for request fingerprints.
std::string hex64(std::uint64_t value);

/// SplitMix64: tiny, fast, and identical on every platform.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n). Uses rejection-free modulo; fine for test-scale n.
    constexpr std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    /// Uniform double in [0, 1).
    constexpr double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

}  // namespace graphrank
