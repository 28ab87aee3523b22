#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace fcaide {

/// Seedable generator with platform-independent output. The engine is
/// std::mt19937_64 (its sequence is fixed by the standard); every
/// distribution is implemented here rather than taken from <random>, whose
/// distributions are implementation-defined.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Standard normal draw (Marsaglia polar method).
  double normal();
  /// Zero-mean Laplace draw with scale b (variance 2 b^2).
  double laplace(double scale);

  /// Independent generator for sub-stream `stream`, derived from this
  /// generator's seed via splitmix64.
  Rng substream(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fcaide
