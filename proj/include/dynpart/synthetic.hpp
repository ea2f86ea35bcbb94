#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynpart/normal_model.hpp"
#include "dynpart/partition.hpp"
#include "dynpart/rng.hpp"

namespace dynpart {

// Ground truth shipped alongside generated data, so metrics can be
// computed without regenerating.
struct Scenario {
  std::string generator;
  int n = 0, T = 0;
  std::uint64_t seed = 0;
  std::vector<Partition> true_partitions;   // per time
  std::set<int> true_changepoints;          // 1-based times in 2..T
  std::vector<int> block_lengths;           // independent generator only
  double lambda = 0.0;                      // ar1 generator only

  void recompute_changepoints() {
    true_changepoints.clear();
    for (int t = 1; t < T; ++t)
      if (!(true_partitions[static_cast<std::size_t>(t)] ==
            true_partitions[static_cast<std::size_t>(t - 1)]))
        true_changepoints.insert(t + 1);
  }
};

struct IndependentConfig {
  int blocks = 9;
  int min_block_len = 5;
  double mean_sd = 2.0;    // cluster means ~ N(0, 4)
  double noise_sd = 0.1;   // observation variance 0.01
};

namespace detail {

// The three alternating cluster configurations: two 3-cluster layouts
// that differ in membership, and one 2-cluster layout.
inline Partition independent_config(int which, int n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  switch (which % 3) {
    case 0:  // contiguous thirds
      for (int i = 0; i < n; ++i)
        labels[static_cast<std::size_t>(i)] = std::min(3 * i / n, 2);
      break;
    case 1:  // round-robin thirds
      for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
      break;
    default:  // halves
      for (int i = 0; i < n; ++i)
        labels[static_cast<std::size_t>(i)] = (2 * i) / n;
      break;
  }
  return Partition::from_labels(labels);
}

}  // namespace detail

// Independent data over nine constant-partition blocks with alternating
// configurations; exactly blocks-1 changepoints by construction.
inline std::pair<DataMatrix, Scenario> gen_independent(
    int n, int T, std::uint64_t seed, const IndependentConfig& cfg = {}) {
  if (n < 6) throw std::invalid_argument("gen_independent: n must be >= 6");
  if (cfg.blocks < 2 || cfg.min_block_len < 1)
    throw std::invalid_argument("gen_independent: bad block configuration");
  if (T < cfg.blocks * cfg.min_block_len)
    throw std::invalid_argument(
        "gen_independent: T too small for the requested blocks");
  Rng rng(seed);
  // Random composition of T into `blocks` parts, each >= min_block_len.
  const int extras = T - cfg.blocks * cfg.min_block_len;
  std::vector<int> cuts;
  for (int c = 0; c < cfg.blocks - 1; ++c)
    cuts.push_back(static_cast<int>(rng.uniform_index(extras + 1)));
  std::sort(cuts.begin(), cuts.end());
  Scenario sc;
  sc.generator = "independent";
  sc.n = n;
  sc.T = T;
  sc.seed = seed;
  int prev = 0;
  for (int b = 0; b < cfg.blocks; ++b) {
    const int cut = (b == cfg.blocks - 1) ? extras : cuts[static_cast<std::size_t>(b)];
    sc.block_lengths.push_back(cfg.min_block_len + cut - prev);
    prev = cut;
  }

  DataMatrix Y(n, T);
  sc.true_partitions.reserve(static_cast<std::size_t>(T));
  int t = 0;
  for (int b = 0; b < cfg.blocks; ++b) {
    const Partition p = detail::independent_config(b, n);
    for (int l = 0; l < sc.block_lengths[static_cast<std::size_t>(b)]; ++l, ++t) {
      sc.true_partitions.push_back(p);
      std::vector<double> means(static_cast<std::size_t>(p.num_blocks()));
      for (auto& m : means) m = rng.normal(0.0, cfg.mean_sd);
      for (int i = 0; i < n; ++i)
        Y.at(i, t) = rng.normal(means[static_cast<std::size_t>(p.label(i))],
                                cfg.noise_sd);
    }
  }
  sc.recompute_changepoints();
  return {std::move(Y), std::move(sc)};
}

struct Ar1Config {
  double beta_equal = 3.0;    // +/- for the equal two-cluster split
  double beta_unequal = 4.0;  // mean of the smaller block (larger gets 0)
  double big_fraction = 0.7;  // size share of the larger block
};

namespace detail {

struct Ar1Layout {
  Partition partition;
  std::vector<double> betas;  // per block
};

inline Ar1Layout ar1_layout(int t_one_based, int n, const Ar1Config& cfg) {
  Ar1Layout lay;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  if (t_one_based % 5 == 0) {
    const int half = n / 2;
    for (int i = half; i < n; ++i) labels[static_cast<std::size_t>(i)] = 1;
    lay.partition = Partition::from_labels(labels);
    lay.betas = {cfg.beta_equal, -cfg.beta_equal};
  } else if (t_one_based % 9 == 0) {
    const int big = static_cast<int>(std::lround(cfg.big_fraction * n));
    for (int i = big; i < n; ++i) labels[static_cast<std::size_t>(i)] = 1;
    lay.partition = Partition::from_labels(labels);
    lay.betas = {0.0, cfg.beta_unequal};
  } else {
    lay.partition = Partition::single_block(n);
    lay.betas = {0.0};
  }
  return lay;
}

}  // namespace detail

// AR(1) recursion y_t = lambda y_{t-1} + beta + eps with unit noise and
// y_0 = 0. One cluster except when t is divisible by 5 (two equal blocks)
// or 9 (one block more than twice the other).
inline std::pair<DataMatrix, Scenario> gen_ar1(int n, int T, double lambda,
                                               std::uint64_t seed,
                                               const Ar1Config& cfg = {}) {
  if (n < 4) throw std::invalid_argument("gen_ar1: n must be >= 4");
  if (T < 1) throw std::invalid_argument("gen_ar1: T must be >= 1");
  if (lambda < 0.0 || lambda >= 1.0)
    throw std::invalid_argument("gen_ar1: lambda must be in [0, 1)");
  Rng rng(seed);
  Scenario sc;
  sc.generator = "ar1";
  sc.n = n;
  sc.T = T;
  sc.seed = seed;
  sc.lambda = lambda;
  DataMatrix Y(n, T);
  std::vector<double> prev(static_cast<std::size_t>(n), 0.0);
  for (int t = 1; t <= T; ++t) {
    const auto lay = detail::ar1_layout(t, n, cfg);
    sc.true_partitions.push_back(lay.partition);
    for (int i = 0; i < n; ++i) {
      const double y =
          lambda * prev[static_cast<std::size_t>(i)] +
          lay.betas[static_cast<std::size_t>(lay.partition.label(i))] +
          rng.normal();
      Y.at(i, t - 1) = y;
      prev[static_cast<std::size_t>(i)] = y;
    }
  }
  sc.recompute_changepoints();
  return {std::move(Y), std::move(sc)};
}

// --- preprocessing pipeline -------------------------------------------

struct PreprocessConfig {
  int ma_window = 2;
  int stride = 5;
  int offset = 1;          // first retained index after smoothing
  bool apply_sqrt = true;
  bool standardize = true;
};

inline std::vector<double> moving_average(std::span<const double> x,
                                          int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window >= 1");
  if (static_cast<int>(x.size()) < window)
    throw std::invalid_argument("moving_average: series shorter than window");
  std::vector<double> out(x.size() - window + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (int w = 0; w < window; ++w) s += x[i + static_cast<std::size_t>(w)];
    out[i] = s / window;
  }
  return out;
}

inline std::vector<double> downsample(std::span<const double> x, int stride,
                                      int offset) {
  if (stride < 1 || offset < 0)
    throw std::invalid_argument("downsample: bad stride/offset");
  std::vector<double> out;
  for (std::size_t i = static_cast<std::size_t>(offset); i < x.size();
       i += static_cast<std::size_t>(stride))
    out.push_back(x[i]);
  return out;
}

// Smoothing, downsampling, square-root transformation, standardization,
// in that order. Every unit must come out at the same length.
inline DataMatrix preprocess(const std::vector<std::vector<double>>& series,
                             const PreprocessConfig& cfg = {}) {
  if (series.empty()) throw std::invalid_argument("preprocess: no series");
  std::vector<std::vector<double>> stage;
  stage.reserve(series.size());
  for (std::size_t u = 0; u < series.size(); ++u) {
    auto x = moving_average(series[u], cfg.ma_window);
    x = downsample(x, cfg.stride, cfg.offset);
    if (x.empty())
      throw std::invalid_argument("preprocess: unit " + std::to_string(u + 1) +
                                  " is empty after downsampling");
    if (cfg.apply_sqrt) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0)
          throw std::invalid_argument(
              "preprocess: negative value at unit " + std::to_string(u + 1) +
              ", time " + std::to_string(i + 1) + "; cannot take square root");
        x[i] = std::sqrt(x[i]);
      }
    }
    if (cfg.standardize) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(x.size());
      double var = 0.0;
      for (double v : x) var += (v - mean) * (v - mean);
      var /= static_cast<double>(x.size());
      const double sd = std::sqrt(var);
      if (sd == 0.0)
        throw std::invalid_argument("preprocess: unit " + std::to_string(u + 1) +
                                    " is constant; cannot standardize");
      for (double& v : x) v = (v - mean) / sd;
    }
    stage.push_back(std::move(x));
    if (stage.back().size() != stage.front().size())
      throw std::invalid_argument(
          "preprocess: units produce different lengths");
  }
  DataMatrix Y(static_cast<int>(stage.size()),
               static_cast<int>(stage.front().size()));
  for (std::size_t u = 0; u < stage.size(); ++u)
    for (std::size_t t = 0; t < stage[u].size(); ++t)
      Y.at(static_cast<int>(u), static_cast<int>(t)) = stage[u][t];
  return Y;
}

}  // namespace dynpart
