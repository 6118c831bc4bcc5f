#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace peerrev {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Independent stream for (seed, replicate, purpose). Every random draw in the
// library flows from one of these.
inline Rng make_stream(std::uint64_t seed, std::uint64_t replicate = 0,
                       std::uint64_t purpose = 0) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ (replicate * 0xd1b54a32d192ed03ULL));
  h = detail::splitmix64(h ^ (purpose * 0x8cb92ba72f3d8dd7ULL));
  return Rng{h};
}

// Uniform double in [0, 1) built from the top 53 bits. Unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n). n must be > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace peerrev

namespace peerrev {

// Standard normal via the Marsaglia polar method; the second variate is
// discarded so the stream position depends only on the number of calls.
inline double standard_normal(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace peerrev
