#pragma once

#include <cstdint>
#include <random>

namespace nfield {

using Rng = std::mt19937_64;

// Stream tags keep the seed spaces of different stochastic stages disjoint.
enum class StreamTag : std::uint32_t {
  simulate = 1,
  burst = 2,
  noise_init = 3,
  annealing = 4,
  oracle = 5,
};

// Derives an independent generator from (base, tag, a, b). Distinct argument
// tuples give distinct seed sequences, so no two streams collide.
inline Rng make_rng(std::uint64_t base, StreamTag tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
      static_cast<std::uint32_t>(tag),
      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace nfield
