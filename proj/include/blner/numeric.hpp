#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace blner {

// log(sum_i exp(v_i)) with the max-shifted reduction.
inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a nan) propagates
  return m + std::log((v.array() - m).exp().sum());
}

// Row-stable softmax of a vector.
inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::ArrayXd shifted = v.array() - v.maxCoeff();
  Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

// Argmax with ties broken toward the lowest index.
inline int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Seeded generator with portable draw helpers. std::*_distribution is
// implementation-defined, so index/real draws are derived from raw bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). Modulo bias is < n / 2^64.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i)
      std::swap(items[i - 1], items[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace blner
