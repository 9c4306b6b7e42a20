#pragma once

#include <cstdint>
#include <random>

namespace nflsim {

// Named substreams derived from the master seed. Every random decision in a
// run draws from exactly one of these, keyed by the ids that identify it, so
// results do not depend on scheduling order or worker count.
enum class Stream : std::uint64_t {
  kInit = 1,
  kSampling = 2,
  kData = 3,
  kPartition = 4,
  kNoise = 5,
  kClient = 6,
  kBehavior = 7,
  kPrivate = 8,
  kFabrication = 9,
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Counter-based seed derivation: hash of (master, stream, a, b).
std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(master, stream, a, b));
}

}  // namespace nflsim
