
#include "minsup/rng.hpp"

#include <cmath>
#include <numbers>

namespace minsup {

Philox4x32::Counter Philox4x32::bijection(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::array<double, 2> NormalStream::pair(std::uint64_t path, std::uint64_t block) const {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32) ^
                                                                      static_cast<std::uint32_t>(stream_ * 0x9E3779B97F4A7C15ull >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_) ^ static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(seed_ >> 32) ^ static_cast<std::uint32_t>(stream_ >> 32)};
  const auto r = Philox4x32::bijection(ctr, key);
  // Two 53-bit uniforms; u1 in (0, 1] keeps the logarithm finite.
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

std::uint64_t stream_id(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace minsup
