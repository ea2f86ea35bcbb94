#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dynpart/partition.hpp"
#include "dynpart/rng.hpp"

namespace dynpart {

// Observation-model hyperparameters: Gaussian kernel variance tau2 and a
// Normal(mu0, sigma02) base measure on cluster-level means.
struct ObsHyper {
  double tau2 = 1.0;
  double mu0 = 0.0;
  double sigma02 = 1.0;

  void validate() const {
    if (!(tau2 > 0.0)) throw std::invalid_argument("ObsHyper: tau2 must be > 0");
    if (!(sigma02 > 0.0))
      throw std::invalid_argument("ObsHyper: sigma02 must be > 0");
  }
};

// n x T observations, stored by time column so per-time slices are
// contiguous.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(int n, int T) : n_(n), T_(T), values_(static_cast<std::size_t>(n) * T, 0.0) {
    if (n < 1 || T < 1)
      throw std::invalid_argument("DataMatrix: dimensions must be positive");
  }

  int n() const { return n_; }
  int T() const { return T_; }

  double& at(int unit, int t) {
    return values_[static_cast<std::size_t>(t) * n_ + unit];
  }
  double at(int unit, int t) const {
    return values_[static_cast<std::size_t>(t) * n_ + unit];
  }

  std::span<const double> column(int t) const {
    return std::span<const double>(values_.data() + static_cast<std::size_t>(t) * n_,
                                   static_cast<std::size_t>(n_));
  }

  void validate_finite() const {
    for (double v : values_)
      if (!std::isfinite(v))
        throw std::invalid_argument("DataMatrix: non-finite entry");
  }

 private:
  int n_ = 0;
  int T_ = 0;
  std::vector<double> values_;
};

namespace detail {

// Log marginal of a cluster summarized by (count m, sum s, sum of squares
// q): log integral of prod_i N(y_i; b, tau2) N(b; mu0, sigma02) db.
inline double cluster_log_marginal_stats(double m, double s, double q,
                                         const ObsHyper& h) {
  const double tau2 = h.tau2, s02 = h.sigma02, mu = h.mu0;
  const double denom = m * s02 + tau2;
  const double v = tau2 * s02 / denom;
  const double b = mu / s02 + s / tau2;
  return -0.5 * m * std::log(2.0 * 3.14159265358979323846) -
         0.5 * m * std::log(tau2) + 0.5 * std::log(tau2 / denom) -
         q / (2.0 * tau2) - mu * mu / (2.0 * s02) + 0.5 * v * b * b;
}

}  // namespace detail

inline double cluster_log_marginal(std::span<const double> ys,
                                   const ObsHyper& h) {
  h.validate();
  if (ys.empty())
    throw std::invalid_argument("cluster_log_marginal: empty cluster");
  double s = 0.0, q = 0.0;
  for (double y : ys) {
    s += y;
    q += y * y;
  }
  return detail::cluster_log_marginal_stats(static_cast<double>(ys.size()), s,
                                            q, h);
}

// log p(Y_t | partition): product over blocks of the conjugate cluster
// marginals, computed in one pass over the units.
inline double partition_log_marginal(std::span<const double> y_t,
                                     const Partition& p, const ObsHyper& h) {
  h.validate();
  if (static_cast<int>(y_t.size()) != p.n())
    throw std::invalid_argument("partition_log_marginal: dimension mismatch");
  const auto k = static_cast<std::size_t>(p.num_blocks());
  std::vector<double> m(k, 0.0), s(k, 0.0), q(k, 0.0);
  for (int i = 0; i < p.n(); ++i) {
    const auto b = static_cast<std::size_t>(p.label(i));
    const double y = y_t[static_cast<std::size_t>(i)];
    m[b] += 1.0;
    s[b] += y;
    q[b] += y * y;
  }
  double lp = 0.0;
  for (std::size_t b = 0; b < k; ++b)
    lp += detail::cluster_log_marginal_stats(m[b], s[b], q[b], h);
  return lp;
}

// Posterior draw of the per-block means: N(m_j, v_j) with
// v_j = tau2 sigma02 / (n_j sigma02 + tau2) and
// m_j = v_j (mu0 / sigma02 + sum_j y / tau2).
inline std::vector<double> sample_cluster_means(std::span<const double> y_t,
                                                const Partition& p,
                                                const ObsHyper& h, Rng& rng) {
  h.validate();
  if (static_cast<int>(y_t.size()) != p.n())
    throw std::invalid_argument("sample_cluster_means: dimension mismatch");
  const auto k = static_cast<std::size_t>(p.num_blocks());
  std::vector<double> cnt(k, 0.0), sum(k, 0.0);
  for (int i = 0; i < p.n(); ++i) {
    const auto b = static_cast<std::size_t>(p.label(i));
    cnt[b] += 1.0;
    sum[b] += y_t[static_cast<std::size_t>(i)];
  }
  std::vector<double> means(k);
  for (std::size_t b = 0; b < k; ++b) {
    const double v = h.tau2 * h.sigma02 / (cnt[b] * h.sigma02 + h.tau2);
    const double m = v * (h.mu0 / h.sigma02 + sum[b] / h.tau2);
    means[b] = rng.normal(m, std::sqrt(v));
  }
  return means;
}

}  // namespace dynpart
