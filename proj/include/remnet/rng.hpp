#pragma once

#include <cstdint>
#include <random>

namespace remnet {

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Seeded generator with platform-stable draws (distributions are implemented
// here rather than via std:: distribution objects).
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(gen_() % static_cast<uint64_t>(n));
  }

  // Derive an independent stream, e.g. per (seed, tag) cell.
  Rng fork(uint64_t tag) const {
    return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(tag)));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return detail::splitmix64(a ^ detail::splitmix64(b));
}

}  // namespace remnet
