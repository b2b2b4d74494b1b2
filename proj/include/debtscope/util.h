#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace debtscope {

inline constexpr std::string_view kToolVersion = "0.3.1";

// SplitMix64 finalizer; used for seed derivation and token hashing.
uint64_t Mix64(uint64_t x);

// FNV-1a over bytes, then mixed with `seed`. Stable across platforms.
uint64_t HashString(std::string_view s, uint64_t seed = 0);

// Derives an independent RNG seed for a named substream.
uint64_t DeriveSeed(uint64_t base, std::string_view stream, uint64_t index = 0);

// Deterministic random source. The standard distributions are not portable
// across library implementations, so every draw is built from raw 64-bit
// output here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64();
  // Uniform in [0, 1).
  double Uniform();
  // Uniform integer in [0, bound). `bound` must be > 0.
  uint64_t Below(uint64_t bound);
  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::string& path);

// Collapses ASCII whitespace runs to one space and trims both ends.
std::string NormalizeWhitespace(std::string_view s);

std::string ToLower(std::string_view s);

std::vector<std::string> SplitString(std::string_view s, char sep);

// Runs fn(i) for i in [0, n) across up to `threads` workers (0 = hardware
// concurrency). fn must only write to slot i of caller-owned storage.
void ParallelFor(size_t n, const std::function<void(size_t)>& fn, unsigned threads = 0);

// Reads DEBTSCOPE_SEED if set; otherwise returns `fallback`.
uint64_t SeedFromEnv(uint64_t fallback);

}  // namespace debtscope
