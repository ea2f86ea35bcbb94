#pragma once

#include <cmath>
#include <stdexcept>

#include "dynpart/partition.hpp"
#include "dynpart/rng.hpp"

namespace dynpart {

// Parameters of the base partition distribution: a Chinese restaurant
// process (sigma == 0) or its two-parameter generalization (0 < sigma < 1
// with theta > -sigma).
struct GibbsParams {
  double theta = 1.0;
  double sigma = 0.0;

  void validate() const {
    if (sigma < 0.0 || sigma >= 1.0)
      throw std::invalid_argument("GibbsParams: sigma must be in [0, 1)");
    if (sigma == 0.0) {
      if (theta <= 0.0)
        throw std::invalid_argument("GibbsParams: theta must be > 0 when sigma = 0");
    } else if (theta <= -sigma) {
      throw std::invalid_argument("GibbsParams: theta must be > -sigma");
    }
  }
};

// log of the ascending factorial (x)_n = x (x+1) ... (x+n-1), x > 0.
inline double log_rising_factorial(double x, int n) {
  if (n == 0) return 0.0;
  if (x <= 0.0)
    throw std::invalid_argument("log_rising_factorial: x must be > 0");
  return std::lgamma(x + n) - std::lgamma(x);
}

// log V_{n,k} from the closed forms: theta^k / (theta)_n for the CRP and
// prod_{j<k} (theta + j sigma) / (theta+1)_{n-1} for the two-parameter CRP.
inline double log_vnk(int n, int k, const GibbsParams& g) {
  g.validate();
  if (k < 1 || k > n) throw std::invalid_argument("log_vnk: need 1 <= k <= n");
  if (g.sigma == 0.0)
    return k * std::log(g.theta) - log_rising_factorial(g.theta, n);
  double num = 0.0;
  for (int j = 1; j < k; ++j) num += std::log(g.theta + j * g.sigma);
  return num - log_rising_factorial(g.theta + 1.0, n - 1);
}

// Log EPPF: log[ V_{n,k} prod_j Gamma(|C_j| - sigma) / Gamma(1 - sigma) ].
inline double eppf_log_prob(const Partition& p, const GibbsParams& g) {
  g.validate();
  double lp = log_vnk(p.n(), p.num_blocks(), g);
  const double lg1ms = std::lgamma(1.0 - g.sigma);
  for (int sz : p.block_sizes()) lp += std::lgamma(sz - g.sigma) - lg1ms;
  return lp;
}

// Sequential predictive draw: unit i joins an occupied block of size n_j
// with weight (n_j - sigma) and opens a new block with weight
// (theta + k sigma). The induced law is exactly eppf_log_prob.
inline Partition sample_partition(int n, const GibbsParams& g, Rng& rng) {
  g.validate();
  if (n < 1) throw std::invalid_argument("sample_partition: n must be >= 1");
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> sizes;
  labels[0] = 0;
  sizes.push_back(1.0);
  for (int i = 1; i < n; ++i) {
    const int k = static_cast<int>(sizes.size());
    double total = g.theta + k * g.sigma;
    for (double s : sizes) total += s - g.sigma;
    double u = rng.uniform() * total;
    int pick = k;  // new block unless an occupied one absorbs u
    for (int j = 0; j < k; ++j) {
      u -= sizes[static_cast<std::size_t>(j)] - g.sigma;
      if (u < 0.0) {
        pick = j;
        break;
      }
    }
    labels[static_cast<std::size_t>(i)] = pick;
    if (pick == k)
      sizes.push_back(1.0);
    else
      sizes[static_cast<std::size_t>(pick)] += 1.0;
  }
  return Partition::from_labels(labels);
}

// Prior expected number of blocks among n units.
inline double expected_num_clusters(int n, const GibbsParams& g) {
  g.validate();
  if (g.sigma == 0.0) {
    double e = 0.0;
    for (int i = 1; i <= n; ++i) e += g.theta / (g.theta + i - 1);
    return e;
  }
  // [(theta + sigma)_n / (theta + 1)_{n-1} - theta] / sigma, in log space
  // so that large n stays finite.
  const double log_ratio = log_rising_factorial(g.theta + g.sigma, n) -
                           log_rising_factorial(g.theta + 1.0, n - 1);
  return (std::exp(log_ratio) - g.theta) / g.sigma;
}

// Solve expected_num_clusters(n, {theta, sigma}) = target for theta by
// bisection (the expectation is strictly increasing in theta). Absolute
// tolerance 1e-6 on theta.
inline double solve_theta(int n, double expected_clusters, double sigma) {
  if (n < 2) throw std::invalid_argument("solve_theta: n must be >= 2");
  if (!(expected_clusters > 1.0 && expected_clusters < n))
    throw std::invalid_argument(
        "solve_theta: expected_clusters must lie in (1, n)");
  const double eps = 1e-8;
  double lo = (sigma == 0.0) ? eps : -sigma + eps;
  double hi = 1e4;
  auto value = [&](double theta) {
    return expected_num_clusters(n, GibbsParams{theta, sigma}) -
           expected_clusters;
  };
  if (value(lo) > 0.0)
    throw std::invalid_argument("solve_theta: target below attainable range");
  while (value(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e12)
      throw std::invalid_argument("solve_theta: target above attainable range");
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dynpart
