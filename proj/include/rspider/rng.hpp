#ifndef RSPIDER_RNG_HPP
#define RSPIDER_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace rspider {

using Rng = std::mt19937_64;

/// Independent streams derived from one user seed. Each consumer of
/// randomness in a run owns one stream id so that adding draws to one
/// consumer never shifts another.
enum class Stream : std::uint64_t {
  Sampling = 1,
  OutputIterate = 2,
  Initialization = 3,
  Basis = 4,
  Probe = 5,
  PowerStart = 6,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  const auto s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

/// Uniform draws with replacement from {0, ..., n-1}.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

}  // namespace rspider

#endif  // RSPIDER_RNG_HPP
