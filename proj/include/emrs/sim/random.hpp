#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emrs::sim {

/// Seedable generator with deterministic child streams.
///
/// Child seeds are derived with splitmix64 over (parent seed, stream label), so
/// every case or subsystem owns an independent, reproducible stream.
class SplitRng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit SplitRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  SplitRng split(std::string_view label) const { return SplitRng(mix(seed_ ^ fnv1a(label))); }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace emrs::sim
