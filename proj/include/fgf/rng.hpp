#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>

namespace fgf {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

// Counter-based stream: the i-th draw depends only on (seed, stream, i), so
// results do not depend on evaluation order or thread count.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) : key_(mix_key(seed, stream)) {}

  std::uint64_t bits(std::uint64_t i) const { return splitmix64(key_ ^ splitmix64(i)); }

  // uniform in (0,1)
  double uniform(std::uint64_t i) const {
    return (static_cast<double>(bits(i) >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal; Box-Muller on the pair (2j, 2j+1), cos branch for even i
  double normal(std::uint64_t i) const {
    auto [c, s] = normal_pair(i >> 1);
    return (i & 1) ? s : c;
  }

  // (normal(2j), normal(2j+1)) from one Box-Muller evaluation
  std::pair<double, double> normal_pair(std::uint64_t j) const {
    double u1 = uniform(2 * j), u2 = uniform(2 * j + 1);
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  // standard complex normal (E|Z|² = 1) from normal_pair(j)
  std::complex<double> cnormal(std::uint64_t j) const {
    auto [a, b] = normal_pair(j);
    return {a * std::numbers::sqrt2 / 2, b * std::numbers::sqrt2 / 2};
  }

 private:
  std::uint64_t key_;
};

// Sequential convenience wrapper around a Stream.
class Sequence {
 public:
  Sequence(std::uint64_t seed, std::uint64_t stream) : s_(seed, stream) {}
  double normal() { return s_.normal(n_++); }
  double uniform() { return s_.uniform(u_++ | (1ULL << 62)); }
  std::uint64_t bits() { return s_.bits(b_++ | (1ULL << 63)); }

 private:
  Stream s_;
  std::uint64_t n_ = 0, u_ = 0, b_ = 0;
};

}  // namespace fgf
