#pragma once

#include <cstdint>
#include <string_view>

namespace seld {

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named sub-stream of a root seed: derive_seed(root, "scene", 3).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(fnv1a64(stream, root ^ 0x6a09e667f3bcc909ULL)) ^ splitmix64(index + 0x3c6ef372fe94f82bULL));
}

/// Counter-based standard normal draw: the value depends only on (key, counter),
/// so any sample of a long noise stream can be generated in isolation.
double counter_gaussian(std::uint64_t key, std::uint64_t counter) noexcept;

/// Uniform in [0, 1) from (key, counter).
double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept;

}  // namespace seld

namespace seld {

/// Sequential draws from a counter-based generator; reproducible across
/// platforms since it avoids std distributions.
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  double uniform() noexcept { return counter_uniform(key_, counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double gaussian() noexcept { return counter_gaussian(key_ ^ 0x5851f42d4c957f2dULL, counter_++); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }
  std::uint64_t next_u64() noexcept { return splitmix64(key_ ^ splitmix64(counter_++ + 0x1234567ULL)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace seld
