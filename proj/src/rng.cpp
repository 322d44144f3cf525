#include "regcal/rng.hpp"

#include <cmath>

namespace regcal {

double Rng::normal() {
  // u1 in (0,1] so the log is finite; u2 in [0,1).
  double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t Rng::index(std::size_t n) {
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = ~0ull - (~0ull % n + 1) % n;
  std::uint64_t x = gen_();
  while (x > limit) x = gen_();
  return static_cast<std::size_t>(x % n);
}

}  // namespace regcal
