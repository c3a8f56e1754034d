#pragma once

#include <cstdint>
#include <initializer_list>

namespace oddball {

// Purpose tags keep streams apart when they share the same
// (seed, variant, step, replica) coordinates.
enum class Draw : std::uint64_t {
  init_hidden = 1,
  init_output = 2,
  dither = 3,
  dropout = 4,
  select = 5,
  shuffle = 6,
  test = 99,  // free for tests / ad-hoc draws
};

// Counter-based stream: splitmix64 over a key hash. A stream is fully
// determined by its key, so a draw can be reproduced without replaying
// whatever other streams did in the meantime. This is what makes replica-
// and step-level parallelism safe: thread scheduling never touches the
// numbers.
class RngStream {
 public:
  RngStream() = default;

  static RngStream keyed(std::initializer_list<std::uint64_t> parts) {
    RngStream s;
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t p : parts) h = mix64(h + 0x9e3779b97f4a7c15ULL + p);
    s.base_ = h;
    return s;
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(base_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // [0, 1), 53-bit resolution
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [lo, hi)
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // [0, n), n >= 1; bias is O(n / 2^64)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace oddball
