#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace profit {

// SplitMix64 finalizer. Also used as the fixed token-hashing mix so that
// feature bucketing is bit-exact across implementations.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 generator.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Unbiased enough for experiment-scale bounds; modulo keeps the
  // sequence trivially reproducible in any language.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Deterministic hash of a byte string through the SplitMix64 mix.
constexpr std::uint64_t hash_bytes(std::string_view s) {
  std::uint64_t h = 0;
  for (unsigned char c : s) {
    h ^= c;
    h = mix64(h + kGolden);
  }
  return h;
}

// Namespaced PRNG stream: one master seed drives independent purposes.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::string_view purpose) {
  return master ^ hash_bytes(purpose);
}

// In-place Fisher-Yates driven by the given generator.
template <typename T>
void fisher_yates(std::vector<T>& v, Prng& prng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = prng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Prng& prng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  fisher_yates(idx, prng);
  return idx;
}

}  // namespace profit
