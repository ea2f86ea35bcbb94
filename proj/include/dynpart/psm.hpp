#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynpart/eppf.hpp"
#include "dynpart/partition.hpp"
#include "dynpart/partition_metrics.hpp"
#include "dynpart/rng.hpp"

namespace dynpart {

// Prior of the partition state model: base law p* plus the per-time
// changepoint probabilities eta_2..eta_T (position t-2 in `etas`).
struct PsmPrior {
  GibbsParams g;
  std::vector<double> etas;

  static PsmPrior shared(const GibbsParams& g, double eta, int T) {
    if (eta < 0.0 || eta > 1.0)
      throw std::invalid_argument("PsmPrior: eta must be in [0, 1]");
    return PsmPrior{g, std::vector<double>(T > 1 ? T - 1 : 0, eta)};
  }

  double eta_at(int t) const {  // t is 1-based state index >= 2
    return etas.at(static_cast<std::size_t>(t - 2));
  }
};

// One trajectory: gamma_t = 0 forces partitions[t] == partitions[t-1].
struct PsmDraw {
  std::vector<Partition> partitions;  // T
  std::vector<int> gammas;            // T-1 (gamma_2..gamma_T)
};

// pi_1 ~ p*; for t >= 2, gamma_t ~ Bern(eta_t), copy on 0, fresh base
// draw on 1.
inline PsmDraw psm_forward(int n, int T, const PsmPrior& prior, Rng& rng) {
  if (T < 1) throw std::invalid_argument("psm_forward: T must be >= 1");
  if (static_cast<int>(prior.etas.size()) != T - 1)
    throw std::invalid_argument("psm_forward: etas must have length T-1");
  PsmDraw d;
  d.partitions.reserve(static_cast<std::size_t>(T));
  d.partitions.push_back(sample_partition(n, prior.g, rng));
  d.gammas.reserve(static_cast<std::size_t>(T - 1));
  for (int t = 2; t <= T; ++t) {
    const int gamma = rng.bernoulli(prior.eta_at(t)) ? 1 : 0;
    d.gammas.push_back(gamma);
    if (gamma == 0)
      d.partitions.push_back(d.partitions.back());
    else
      d.partitions.push_back(sample_partition(n, prior.g, rng));
  }
  return d;
}

// Expected Rand index between two states `lag` apart under a shared eta:
// 1 - 2 V22 (1 - V22) [1 - (1-eta)^lag], with V22 the prior probability
// that two units fall in different blocks.
inline double eri_closed_form(const GibbsParams& g, double eta, int lag) {
  g.validate();
  if (lag < 1) throw std::invalid_argument("eri_closed_form: lag must be >= 1");
  if (eta < 0.0 || eta > 1.0)
    throw std::invalid_argument("eri_closed_form: eta must be in [0, 1]");
  const double v22 = (g.theta + g.sigma) / (g.theta + 1.0);
  const double mix = 1.0 - std::pow(1.0 - eta, lag);
  return 1.0 - 2.0 * v22 * (1.0 - v22) * mix;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo expected Rand index between states t1 < t2 of the PSM.
inline MonteCarloEstimate eri_monte_carlo(int n, int T, const PsmPrior& prior,
                                          int t1, int t2, int draws, Rng& rng) {
  if (!(1 <= t1 && t1 < t2 && t2 <= T))
    throw std::invalid_argument("eri_monte_carlo: need 1 <= t1 < t2 <= T");
  if (draws < 1) throw std::invalid_argument("eri_monte_carlo: draws >= 1");
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < draws; ++r) {
    const PsmDraw d = psm_forward(n, T, prior, rng);
    const double ri =
        rand_index(d.partitions[static_cast<std::size_t>(t1 - 1)],
                   d.partitions[static_cast<std::size_t>(t2 - 1)]);
    sum += ri;
    sumsq += ri * ri;
  }
  MonteCarloEstimate e;
  e.mean = sum / draws;
  const double var = std::max(0.0, sumsq / draws - e.mean * e.mean);
  e.std_error = std::sqrt(var / draws);
  return e;
}

// T x T matrix of mean adjusted Rand indices between lagged states,
// averaged over `draws` PSM trajectories. Symmetric with unit diagonal.
inline std::vector<std::vector<double>> lagged_ari_matrix(
    int n, int T, const PsmPrior& prior, int draws, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("lagged_ari_matrix: draws >= 1");
  std::vector<std::vector<double>> m(
      static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  for (int r = 0; r < draws; ++r) {
    const PsmDraw d = psm_forward(n, T, prior, rng);
    for (int i = 0; i < T; ++i)
      for (int j = i + 1; j < T; ++j) {
        const double a =
            adjusted_rand_index(d.partitions[static_cast<std::size_t>(i)],
                                d.partitions[static_cast<std::size_t>(j)]);
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += a;
      }
  }
  for (int i = 0; i < T; ++i) {
    m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int j = i + 1; j < T; ++j) {
      m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /= draws;
      m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

// Reparametrization linking the two-view hierarchical representation to
// the sequential one: eta_tilde = 1 - sqrt(1 - eta).
inline double eta_tilde_from_eta(double eta) {
  if (eta < 0.0 || eta > 1.0)
    throw std::invalid_argument("eta_tilde_from_eta: eta must be in [0, 1]");
  return 1.0 - std::sqrt(1.0 - eta);
}

struct MultiviewDraw {
  Partition parent;
  std::vector<Partition> children;
  std::vector<int> indicators;  // 1 where the child departs from the parent
};

// Hierarchical generative model: a common parent partition from p*, and
// per-view children that copy the parent with probability 1 - eta_tilde
// or redraw from p*.
inline MultiviewDraw multiview_forward(int n, int views, const GibbsParams& g,
                                       double eta_tilde, Rng& rng) {
  if (views < 2)
    throw std::invalid_argument("multiview_forward: views must be >= 2");
  if (eta_tilde < 0.0 || eta_tilde > 1.0)
    throw std::invalid_argument("multiview_forward: eta_tilde in [0, 1]");
  MultiviewDraw d;
  d.parent = sample_partition(n, g, rng);
  d.children.reserve(static_cast<std::size_t>(views));
  d.indicators.reserve(static_cast<std::size_t>(views));
  for (int v = 0; v < views; ++v) {
    const int dep = rng.bernoulli(eta_tilde) ? 1 : 0;
    d.indicators.push_back(dep);
    d.children.push_back(dep ? sample_partition(n, g, rng) : d.parent);
  }
  return d;
}

}  // namespace dynpart
