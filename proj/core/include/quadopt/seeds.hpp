#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace quadopt {

/// The single random engine used throughout the library.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Labeled seed derivation: one master seed fans out to independent streams.
///
///   derive_seed(master, label, index) =
///       mix64(mix64(master ^ fnv1a64(label)) + 0x9e3779b97f4a7c15 * (index + 1))
///
/// Streams with different labels or indices are statistically independent,
/// while the same (master, label, index) triple always yields the same seed.
/// Labels used by the loop: "initial", "probe", "ensemble", "train", "search",
/// "refine", "select"; baselines add "rs", "surrogate-rs-pool" and
/// "surrogate-ga".
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(master, label, index));
}

/// Fair coin.
inline bool coin(Rng& rng) { return (rng() >> 63) != 0; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace quadopt
