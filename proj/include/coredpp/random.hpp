#pragma once

#include <cstdint>
#include <random>

namespace coredpp {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seed for stream `stream` derived from a root seed. Distinct streams of the
/// same root are statistically independent and reproducible.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream) {
  return detail::splitmix64(detail::splitmix64(root) ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t root, std::uint64_t stream = 0) {
  return Rng(stream_seed(root, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <typename Int>
Int uniform_index(Rng& rng, Int n) {
  return std::uniform_int_distribution<Int>(0, n - 1)(rng);
}

}  // namespace coredpp
