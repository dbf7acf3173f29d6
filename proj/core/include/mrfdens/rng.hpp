#pragma once

#include <cstdint>
#include <string_view>

namespace mrfdens {

// splitmix64: used both as the generator driver and to derive independent
// per-component streams from one global seed. All uniforms are produced from
// raw 64-bit outputs, so streams are identical across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially related seeds
    next();
    next();
  }

  std::uint64_t next() { return splitmix64(state_); }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // uniform index in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // independent stream for a named component
  Rng derive(std::string_view tag) const {
    return Rng(state_ ^ fnv1a64(tag) ^ 0xa5a5a5a5a5a5a5a5ULL);
  }

  Rng derive(std::uint64_t salt) const {
    std::uint64_t s = state_ + 0x632be59bd9b4e019ULL * (salt + 1);
    return Rng(s);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mrfdens
