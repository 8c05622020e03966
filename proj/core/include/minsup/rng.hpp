#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace minsup {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter bijection(Counter ctr, Key key);
};

/// Standard normals addressed by (seed, stream, path, index); independent of
/// the order in which they are requested.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  /// The pair of normals at indices 2*block and 2*block + 1.
  std::array<double, 2> pair(std::uint64_t path, std::uint64_t block) const;
  double at(std::uint64_t path, std::uint64_t index) const { return pair(path, index / 2)[index % 2]; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Stable 64-bit stream id for a label (FNV-1a).
std::uint64_t stream_id(std::string_view label);

}  // namespace minsup
