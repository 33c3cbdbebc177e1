#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace condu {

//! SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Counter-based seed derivation: the seed of stream (master, c1, c2, ...)
//! depends only on its coordinates, never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> counters)
{
  std::uint64_t s = splitmix64(master);
  for (auto c : counters) {
    s = splitmix64(s ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  }
  return s;
}

using Rng = std::mt19937_64;

//! Uniform draw in the open interval (0, 1) from 53 random bits.
inline double uniform_open(Rng& rng)
{
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace condu
