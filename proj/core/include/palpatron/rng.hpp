#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace palpatron
{

/// SplitMix64 finaliser; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the named child stream of a session seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so every draw here is
/// computed from raw 64-bit engine output to keep sessions bit-reproducible.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent generator for a named sub-stream.
  Rng split(std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

private:
  std::mt19937_64 engine_;
};

}  // namespace palpatron
