#include "palpatron/rng.hpp"

#include <cmath>
#include <numbers>

namespace palpatron
{

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept
{
  // FNV-1a over the stream name, mixed with the parent seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : stream)
  {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

Rng Rng::split(std::string_view stream)
{
  return Rng(derive_seed(next_u64(), stream));
}

double Rng::uniform()
{
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n)
{
  if (n <= 1)
  {
    return 0;
  }
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit)
  {
    x = engine_();
  }
  return x % n;
}

double Rng::normal()
{
  double u1 = uniform();
  while (u1 <= 0.0)
  {
    u1 = uniform();
  }
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace palpatron
