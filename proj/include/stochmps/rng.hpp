#ifndef STOCHMPS_RNG_HPP
#define STOCHMPS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace stochmps {

// splitmix64 stream with explicit Box-Muller normals. Monte-Carlo batches
// derive one independent substream per path from (seed, path index), so
// results are reproducible across platforms and thread counts.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x7b1dcdaf1a2b3c4dULL)) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed) ^ mix(index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cache_ = r * std::sin(6.283185307179586476925286766559 * u2);
    have_cache_ = true;
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Sample an index from unnormalized weights w[0..n-1] with given total.
  int categorical(const double* w, int n, double total) {
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u <= acc) return i;
    }
    return n - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_cache_ = false;
  double cache_ = 0.0;
};

// Runs body(i) for i in [0, n) on up to n_threads workers. Each index must
// write only to its own slots; callers reduce sequentially afterwards so the
// result does not depend on the thread count.
inline void parallel_for(std::int64_t n, int n_threads,
                         const std::function<void(std::int64_t)>& body) {
  if (n_threads <= 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  int workers = static_cast<int>(std::min<std::int64_t>(n_threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &body] {
      for (std::int64_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace stochmps

#endif
