#pragma once

#include <cstdint>
#include <random>

namespace samlab {

using Rng = std::mt19937_64;

/// Role constants xor-ed into a run seed so that each consumer draws from its
/// own stream. Changing how many numbers one consumer draws never shifts the
/// others.
namespace seed_role {
inline constexpr std::uint64_t kInit = 0x696e6974'00000001ULL;
inline constexpr std::uint64_t kShuffle = 0x73687566'00000002ULL;
inline constexpr std::uint64_t kEpsilon = 0x65707369'00000003ULL;
inline constexpr std::uint64_t kProbe = 0x70726f62'00000004ULL;
inline constexpr std::uint64_t kSlice = 0x736c6963'00000005ULL;
}  // namespace seed_role

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t role) noexcept {
  return seed ^ role;
}

/// splitmix64 finalizer, used to combine a seed with a counter (epoch, restart).
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace samlab
