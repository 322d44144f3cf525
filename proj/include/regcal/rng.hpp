#pragma once

#include <cstdint>
#include <random>

namespace regcal {

// Counter-based seed derivation (splitmix64 finalizer). Used everywhere a
// master seed has to be split into independent per-row / per-task seeds so
// that results do not depend on scheduling or on how many rows precede a
// given one.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Streams keep seeds drawn for different purposes from colliding even when
// they share the same (seed, index) pair.
enum class SeedStream : std::uint64_t {
  draw = 1,       // parameter draws
  run = 2,        // simulator run seeds
  fit = 3,        // fold assignment and other fit-side randomness
  split = 4,      // table splits
  chain = 5,      // MCMC proposals
  refine = 6,     // SMD refinement stages
  stage = 7,      // benchmark pipeline stages
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream,
                                 std::uint64_t index) {
  std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)));
  return mix64(h ^ mix64(index));
}

// Thin wrapper over mt19937_64 with explicit draw algorithms. The standard
// distributions are not pinned across library versions, so uniform and
// normal are spelled out here to keep byte-identical reruns honest.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call, two u64 draws per call. No cached spare:
  // the draw count per call is fixed, which keeps downstream seeds aligned.
  double normal();

  std::size_t index(std::size_t n);  // uniform on {0,...,n-1}, n > 0

 private:
  std::mt19937_64 gen_;
};

}  // namespace regcal
