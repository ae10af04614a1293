#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace gmc {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Key derivation: chained splitmix finalizers, so (master, replica, layer,
// stream) tuples map to statistically independent streams.
inline std::uint64_t derive_key(std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t k = mix64(a + 0x9e3779b97f4a7c15ULL);
  k = mix64(k ^ (b + 0xd1b54a32d192ed03ULL));
  k = mix64(k ^ (c + 0x8cb92ba72f3d8dd7ULL));
  k = mix64(k ^ (d + 0xe7037ed1a0b428dbULL));
  return k;
}

// Counter-based generator: output i is mix64(key + i*gamma). Streams never
// share state, so replicas and layers can be drawn in any order or thread.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  static CounterRng keyed(std::uint64_t master, std::uint64_t s1 = 0,
                          std::uint64_t s2 = 0, std::uint64_t s3 = 0) {
    return CounterRng(derive_key(master, s1, s2, s3));
  }

  std::uint64_t next() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ ^ counter_);
  }

  // Uniform on (0,1]; never 0 so log() is safe.
  double uniform() {
    return (double(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill_normal(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    fill_normal(v);
    return v;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace gmc
