#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace edgesim {

/// Seeded generator with platform-independent draws.
///
/// std::uniform_real_distribution and friends are implementation-defined, so
/// every draw here is derived directly from the 64-bit engine output. That
/// keeps logs and checkpoints byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (no cached second value).
  double normal();

  std::string serialize() const;
  void deserialize(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named sub-stream ("env", "agent-init", "exploration", ...) of a
/// master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

}  // namespace edgesim
