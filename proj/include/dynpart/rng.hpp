#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace dynpart {

// Stateless 64-bit mixer used to derive independent sub-stream seeds from a
// master seed. Stable across platforms and versions; see README.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Random stream owned by a single task at a time. All variate generators are
// implemented here (rather than via std:: distributions) so that a given seed
// produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  // Independent stream derived from this stream's seed and a tag.
  [[nodiscard]] Rng substream(std::uint64_t tag) const {
    return Rng(mix_seed(seed_, tag));
  }
  [[nodiscard]] Rng substream(std::uint64_t tag, std::uint64_t index) const {
    return Rng(mix_seed(mix_seed(seed_, tag), index));
  }

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (cosine branch only).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  double inverse_gamma(double shape, double rate) {
    return rate / gamma(shape);
  }

  // Index draw from unnormalized log-weights (log-sum-exp normalization).
  std::size_t categorical_from_log(std::span<const double> log_w) {
    if (log_w.empty())
      throw std::invalid_argument("categorical_from_log: empty weights");
    double mx = -std::numeric_limits<double>::infinity();
    for (double w : log_w) mx = std::max(mx, w);
    if (!std::isfinite(mx))
      throw std::runtime_error("categorical_from_log: all weights underflow");
    double total = 0.0;
    for (double w : log_w) total += std::exp(w - mx);
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < log_w.size(); ++i) {
      u -= std::exp(log_w[i] - mx);
      if (u < 0.0) return i;
    }
    return log_w.size() - 1;
  }

  // Permutation of 0..n-1 (Fisher-Yates).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto j = uniform_index(static_cast<std::size_t>(i) + 1);
      std::swap(p[i], p[static_cast<int>(j)]);
    }
    return p;
  }

  // Serialization for checkpoints.
  friend std::ostream& operator<<(std::ostream& os, const Rng& r) {
    return os << r.seed_ << ' ' << r.gen_;
  }
  friend std::istream& operator>>(std::istream& is, Rng& r) {
    return is >> r.seed_ >> r.gen_;
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
};

// Log-sum-exp over a span; -inf for empty input.
inline double log_sum_exp(std::span<const double> log_v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_v) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double total = 0.0;
  for (double v : log_v) total += std::exp(v - mx);
  return mx + std::log(total);
}

}  // namespace dynpart
