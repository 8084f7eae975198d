// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace cropdrqn {

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Reproducible random stream identified by (seed, stream id).
///
/// Distinct stream ids under one seed give independent engines; the same pair
/// always reproduces the same sequence on one platform.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {
    const std::uint64_t a = detail::splitmix64(seed);
    const std::uint64_t b = detail::splitmix64(stream ^ 0xD1B54A32D192ED03ull);
    const std::uint64_t c = detail::splitmix64(a ^ detail::splitmix64(b));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  engine_type& engine() noexcept { return engine_; }

  /// Child stream keyed by `id`; does not advance this stream.
  RngStream derive(std::uint64_t id) const {
    return RngStream(seed_, detail::splitmix64(stream_ * 0x9E3779B97F4A7C15ull + id + 1));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace cropdrqn
