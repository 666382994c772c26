#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace deepcurrents {

/// One round of the splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed splitting rule: named sub-seeds are
///   splitmix64(master ^ fnv1a64(name))
/// so every randomized stage ("init", "rff", "ambient", "surface",
/// "epsilon", ...) draws from an independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

/// Counter-based generator: the i-th draw is a pure function of (key, i).
/// Portable across platforms and standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}
  Rng(std::uint64_t master, std::string_view stream) : key_(derive_seed(master, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ull * counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, the pair's second
  /// value is cached).
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace deepcurrents
