#pragma once

#include <cstdint>
#include <random>

namespace semidec {

// Named random substreams.  Every consumer of randomness derives its own
// generator from (seed, stream, a, b), so e.g. the gradient noise of device i
// at round t is identical no matter which server primitive runs, which
// sampling happens, or whether the topology is resampled.
enum class Stream : std::uint64_t {
  Data = 1,      // dataset / objective construction
  Gradient = 2,  // (a = round, b = device)
  Sampling = 3,  // (a = round)
  Topology = 4,  // (a = round)
  Probe = 5,     // heterogeneity probe points
};

namespace detail {

// Finalizer of the splitmix64 generator; bijective 64-bit mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Hash chain over (seed, stream, a, b) in the splitmix64 style.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  std::uint64_t h = detail::mix64(seed + kGamma);
  h = detail::mix64((h + kGamma) ^ static_cast<std::uint64_t>(stream));
  h = detail::mix64((h + kGamma) ^ a);
  h = detail::mix64((h + kGamma) ^ b);
  return h;
}

inline std::mt19937_64 substream(std::uint64_t seed, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(seed, stream, a, b));
}

}  // namespace semidec
