#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dml {

// Deterministic random streams. All scalar recipes are spelled out here
// instead of using <random> distributions, whose outputs differ between
// standard libraries; identical seeds must reproduce identical runs on
// every platform this builds on.

/// splitmix64 finalizer; also usable as a standalone hash of one word.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream seed from a root seed, a stream tag and an
/// index (epoch number, batch number, ...).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

/// FNV-1a over a byte string; stable across platforms. Used for config hashes.
std::uint64_t fnv1a64(const std::string& s);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (caches the paired deviate).
  double normal();
  double normal(double mean, double stddev);

  /// Uniform index in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream tags for derive_seed. Keep values stable; logs and checkpoints
// produced with one build must replay on the next.
enum SeedStream : std::uint64_t {
  kSeedHeadInit = 1,
  kSeedDropout = 2,
  kSeedBatches = 3,
  kSeedBankInit = 4,
  kSeedSyntheticCenters = 5,
  kSeedSyntheticNoise = 6,
};

}  // namespace dml
