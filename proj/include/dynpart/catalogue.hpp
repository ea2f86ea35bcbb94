#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "dynpart/eppf.hpp"
#include "dynpart/normal_model.hpp"
#include "dynpart/partition.hpp"
#include "dynpart/rng.hpp"

namespace dynpart {

// Interning pool: canonical partitions get stable dense ids, so chain
// state, catalogue entries and likelihood caches can all work in id
// space where equality is an integer compare.
class PartitionTable {
 public:
  std::uint32_t intern(const Partition& p) {
    auto it = index_.find(p);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(items_.size());
    items_.push_back(p);
    index_.emplace(items_.back(), id);
    return id;
  }

  const Partition& operator[](std::uint32_t id) const { return items_[id]; }
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<Partition> items_;
  std::unordered_map<Partition, std::uint32_t, PartitionHash> index_;
};

// Per-time lists of posterior partition draws from independent base-model
// fits, plus the Monte Carlo estimate of the per-time marginal likelihood
// g_t. Duplicates are retained on purpose: selection is uniform over the
// stored draws, so frequency encodes the posterior mass.
struct Catalogue {
  PartitionTable table;
  std::vector<std::vector<std::uint32_t>> draws;  // [T][m_t]
  std::vector<double> log_g;                      // [T]
  std::vector<std::string> warnings;

  int T() const { return static_cast<int>(draws.size()); }
  std::size_t size(int t) const { return draws[static_cast<std::size_t>(t)].size(); }
  const Partition& partition(int t, std::size_t i) const {
    return table[draws[static_cast<std::size_t>(t)][i]];
  }
};

struct CatalogueConfig {
  int draws = 2000;   // retained sweeps per time
  int burnin = 500;   // discarded sweeps per time
  int threads = 1;    // per-time fits are independent; results do not
                      // depend on the worker count
};

namespace detail {

// One-unit-at-a-time conjugate reallocation sweep over a single data
// column, targeting p*(pi) p(y | pi). Cluster bookkeeping keeps counts
// and sums so each candidate weight is O(1).
class AllocationSampler {
 public:
  AllocationSampler(std::span<const double> y, const GibbsParams& g,
                    const ObsHyper& h)
      : y_(y.begin(), y.end()), g_(g), h_(h),
        labels_(y.size(), 0),
        cnt_(1, static_cast<double>(y.size())), sum_(1, 0.0) {
    for (double v : y_) sum_[0] += v;
  }

  void sweep(Rng& rng) {
    const int n = static_cast<int>(y_.size());
    std::vector<double> logw;
    for (int i = 0; i < n; ++i) {
      remove(i);
      const int k = static_cast<int>(cnt_.size());
      logw.clear();
      logw.reserve(static_cast<std::size_t>(k) + 1);
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        logw.push_back(std::log(cnt_[ju] - g_.sigma) +
                       delta_log_marginal(cnt_[ju], sum_[ju], y_[static_cast<std::size_t>(i)]));
      }
      logw.push_back(std::log(g_.theta + k * g_.sigma) +
                     delta_log_marginal(0.0, 0.0, y_[static_cast<std::size_t>(i)]));
      const auto pick = rng.categorical_from_log(logw);
      insert(i, static_cast<int>(pick));
    }
  }

  Partition partition() const { return Partition::from_labels(labels_); }

  void set_hyper(const ObsHyper& h) { h_ = h; }

 private:
  // Change in the cluster log marginal when y joins a cluster currently
  // holding (m, s); the sum-of-squares term is common to every choice and
  // cancels after normalization, so it is kept for numerical clarity only.
  double delta_log_marginal(double m, double s, double y) const {
    const double tau2 = h_.tau2, s02 = h_.sigma02, mu = h_.mu0;
    auto part = [&](double mm, double ss) {
      if (mm == 0.0) return 0.0;
      const double denom = mm * s02 + tau2;
      const double b = mu / s02 + ss / tau2;
      return -0.5 * mm * std::log(2.0 * 3.14159265358979323846 * tau2) +
             0.5 * std::log(tau2 / denom) +
             0.5 * tau2 * s02 / denom * b * b - mu * mu / (2.0 * s02);
    };
    return part(m + 1.0, s + y) - part(m, s) - y * y / (2.0 * h_.tau2);
  }

  void remove(int i) {
    const auto c = static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)]);
    cnt_[c] -= 1.0;
    sum_[c] -= y_[static_cast<std::size_t>(i)];
    if (cnt_[c] == 0.0) {
      const auto last = cnt_.size() - 1;
      if (c != last) {
        cnt_[c] = cnt_[last];
        sum_[c] = sum_[last];
        for (auto& l : labels_)
          if (l == static_cast<int>(last)) l = static_cast<int>(c);
      }
      cnt_.pop_back();
      sum_.pop_back();
    }
    labels_[static_cast<std::size_t>(i)] = -1;
  }

  void insert(int i, int cluster) {
    if (cluster == static_cast<int>(cnt_.size())) {
      cnt_.push_back(0.0);
      sum_.push_back(0.0);
    }
    const auto c = static_cast<std::size_t>(cluster);
    cnt_[c] += 1.0;
    sum_[c] += y_[static_cast<std::size_t>(i)];
    labels_[static_cast<std::size_t>(i)] = cluster;
  }

  std::vector<double> y_;
  GibbsParams g_;
  ObsHyper h_;
  std::vector<int> labels_;
  std::vector<double> cnt_, sum_;
};

}  // namespace detail

// Independent base-model fit at every time point; the retained sweeps
// become the per-time catalogue. Each time gets its own random stream
// derived from `rng`, so the result is identical for any thread count.
inline Catalogue build_catalogue(const DataMatrix& Y, const ObsHyper& hyper,
                                 const GibbsParams& g,
                                 const CatalogueConfig& cfg, const Rng& rng) {
  hyper.validate();
  g.validate();
  if (cfg.draws < 1)
    throw std::invalid_argument("build_catalogue: draws must be >= 1");
  const int T = Y.T();
  Catalogue cat;
  cat.draws.resize(static_cast<std::size_t>(T));
  cat.log_g.assign(static_cast<std::size_t>(T), 0.0);

  std::vector<std::vector<Partition>> raw(static_cast<std::size_t>(T));
  auto fit_one = [&](int t) {
    auto col = Y.column(t);
    Rng local = rng.substream(0xCA7, static_cast<std::uint64_t>(t));
    detail::AllocationSampler s(col, g, hyper);
    for (int it = 0; it < cfg.burnin; ++it) s.sweep(local);
    auto& out = raw[static_cast<std::size_t>(t)];
    out.reserve(static_cast<std::size_t>(cfg.draws));
    for (int it = 0; it < cfg.draws; ++it) {
      s.sweep(local);
      out.push_back(s.partition());
    }
  };

  const int workers = std::max(1, cfg.threads);
  if (workers == 1 || T == 1) {
    for (int t = 0; t < T; ++t) fit_one(t);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(workers, T); ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < T; t = next.fetch_add(1)) fit_one(t);
      });
    for (auto& th : pool) th.join();
  }

  for (int t = 0; t < T; ++t) {
    auto col = Y.column(t);
    double lo = col[0], hi = col[0];
    for (double v : col) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)))
      cat.warnings.push_back("near-constant data column at time " +
                             std::to_string(t + 1));
    auto& ids = cat.draws[static_cast<std::size_t>(t)];
    ids.reserve(raw[static_cast<std::size_t>(t)].size());
    for (const auto& p : raw[static_cast<std::size_t>(t)])
      ids.push_back(cat.table.intern(p));
  }
  return cat;
}

struct GEstimate {
  std::vector<double> log_g;           // per-time log g_t
  std::vector<Partition> sample;       // unique prior draws (shared across t)
  std::vector<int> sample_counts;      // multiplicities, sum = M
};

// Monte Carlo estimate of g_t = E_{pi ~ p*}[ p(Y_t | pi) ], with one
// prior partition sample shared across all t. Duplicate draws are
// grouped so each unique partition's marginal is evaluated once per t.
inline GEstimate estimate_g(const DataMatrix& Y, const GibbsParams& g,
                            const ObsHyper& hyper, int M, Rng& rng) {
  g.validate();
  hyper.validate();
  if (M < 1) throw std::invalid_argument("estimate_g: M must be >= 1");
  GEstimate est;
  std::unordered_map<Partition, std::size_t, PartitionHash> index;
  for (int i = 0; i < M; ++i) {
    Partition p = sample_partition(Y.n(), g, rng);
    auto it = index.find(p);
    if (it == index.end()) {
      index.emplace(p, est.sample.size());
      est.sample.push_back(std::move(p));
      est.sample_counts.push_back(1);
    } else {
      ++est.sample_counts[it->second];
    }
  }
  const int T = Y.T();
  est.log_g.resize(static_cast<std::size_t>(T));
  std::vector<double> terms(est.sample.size());
  for (int t = 0; t < T; ++t) {
    auto col = Y.column(t);
    for (std::size_t u = 0; u < est.sample.size(); ++u)
      terms[u] = std::log(static_cast<double>(est.sample_counts[u])) +
                 partition_log_marginal(col, est.sample[u], hyper);
    est.log_g[static_cast<std::size_t>(t)] =
        log_sum_exp(terms) - std::log(static_cast<double>(M));
  }
  return est;
}

struct VariancePrior {
  double shape = 15.0;
  double rate = 3.0;
  double mean() const {
    if (shape <= 1.0)
      throw std::invalid_argument("VariancePrior: mean needs shape > 1");
    return rate / (shape - 1.0);
  }
};

struct AdaptedVariances {
  double tau2 = 0.0;
  double sigma02 = 0.0;
};

// Optional pre-phase: a short run of per-time independent fits with
// reinstated cluster means, updating tau2 and sigma02 from their
// Inverse-Gamma full conditionals. Returns posterior means over the
// second half of the run; the main chain then holds them fixed.
inline AdaptedVariances adapt_variances(const DataMatrix& Y,
                                        const GibbsParams& g,
                                        const VariancePrior& tau_prior,
                                        const VariancePrior& sigma_prior,
                                        double mu0, int iters, Rng& rng) {
  g.validate();
  if (iters < 2) throw std::invalid_argument("adapt_variances: iters >= 2");
  const int n = Y.n(), T = Y.T();
  ObsHyper h{tau_prior.mean(), mu0, sigma_prior.mean()};
  std::vector<detail::AllocationSampler> samplers;
  samplers.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    samplers.emplace_back(Y.column(t), g, h);
  double tau2_acc = 0.0, s02_acc = 0.0;
  int acc = 0;
  for (int it = 0; it < iters; ++it) {
    double resid_ss = 0.0, mean_ss = 0.0;
    double n_obs = 0.0, n_clusters = 0.0;
    for (int t = 0; t < T; ++t) {
      auto col = Y.column(t);
      auto& s = samplers[static_cast<std::size_t>(t)];
      s.set_hyper(h);
      s.sweep(rng);
      const Partition p = s.partition();
      const auto means = sample_cluster_means(col, p, h, rng);
      for (int i = 0; i < n; ++i) {
        const double r = col[static_cast<std::size_t>(i)] -
                         means[static_cast<std::size_t>(p.label(i))];
        resid_ss += r * r;
      }
      for (double m : means) {
        const double d = m - mu0;
        mean_ss += d * d;
      }
      n_obs += n;
      n_clusters += p.num_blocks();
    }
    h.tau2 = rng.inverse_gamma(tau_prior.shape + 0.5 * n_obs,
                               tau_prior.rate + 0.5 * resid_ss);
    h.sigma02 = rng.inverse_gamma(sigma_prior.shape + 0.5 * n_clusters,
                                  sigma_prior.rate + 0.5 * mean_ss);
    if (it >= iters / 2) {
      tau2_acc += h.tau2;
      s02_acc += h.sigma02;
      ++acc;
    }
  }
  return AdaptedVariances{tau2_acc / acc, s02_acc / acc};
}

}  // namespace dynpart
