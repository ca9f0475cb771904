#ifndef CARNOT_RNG_HPP
#define CARNOT_RNG_HPP

#include <cstdint>
#include <string_view>
#include <vector>

#include "carnot/rational.hpp"

namespace carnot {

/// splitmix64 step; used both as a generator and to derive independent
/// streams from (seed, tag) pairs so results do not depend on thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic, implementation-independent uniform generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x5851f42d4c957f2dull) {}
  Rng(std::uint64_t seed, std::string_view tag) : Rng(seed ^ hash_tag(tag)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Small random rational p/q, p in [-num_max, num_max], q in [1, den_max].
  Rat rational(int num_max = 12, int den_max = 8) {
    const long long p =
        static_cast<long long>(below(2ull * num_max + 1)) - static_cast<long long>(num_max);
    const long long q = static_cast<long long>(below(den_max)) + 1;
    return Rat(p, q);
  }

  std::vector<double> uniform_vec(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  std::vector<Rat> rational_vec(std::size_t n, int num_max = 12, int den_max = 8) {
    std::vector<Rat> v(n);
    for (auto& x : v) x = rational(num_max, den_max);
    return v;
  }

  /// Derives an independent stream for a sub-task.
  Rng fork(std::string_view tag) { return Rng(state_ ^ hash_tag(tag), tag); }
  Rng fork(std::uint64_t index) {
    std::uint64_t s = state_ + 0x9e3779b97f4a7c15ull * (index + 1);
    return Rng(splitmix64(s));
  }

 private:
  std::uint64_t state_;
};

}  // namespace carnot

#endif
