#pragma once

// Seed splitting. Every random stream in the project is an mt19937_64 seeded
// from derive_seed(master, tag...), so that e.g. machine i's stream depends
// only on (master, i) and never on how many machines exist.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dmest {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Folds each tag into the state with mix64: derive_seed(s, {a, b}) ==
// derive_seed(derive_seed(s, {a}), {b}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(master, tags));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace dmest
