#include "seld/random.hpp"

#include <cmath>
#include <numbers>

namespace seld {

double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t bits = splitmix64(key ^ splitmix64(counter));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double counter_gaussian(std::uint64_t key, std::uint64_t counter) noexcept {
  // Box-Muller on two independent uniforms; u1 is kept away from zero.
  const double u1 = (static_cast<double>(splitmix64(key ^ splitmix64(2 * counter)) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = counter_uniform(key, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace seld
