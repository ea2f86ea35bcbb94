#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "dynpart/partition.hpp"
#include "dynpart/sampler.hpp"

namespace dynpart {

// Dense square matrix, row-major. Used for co-clustering probabilities.
struct Matrix {
  int n = 0;
  std::vector<double> v;

  Matrix() = default;
  explicit Matrix(int n_) : n(n_), v(static_cast<std::size_t>(n_) * n_, 0.0) {}
  double& operator()(int i, int j) {
    return v[static_cast<std::size_t>(i) * n + j];
  }
  double operator()(int i, int j) const {
    return v[static_cast<std::size_t>(i) * n + j];
  }
};

// Posterior probability of a changepoint at each decision time. Entry j
// refers to time j+2 in 1-based terms (the first possible changepoint).
inline std::vector<double> compute_ppc(const ChainOutput& out) {
  if (out.retained < 1)
    throw std::invalid_argument("compute_ppc: no retained draws");
  std::vector<double> ppc(static_cast<std::size_t>(out.T - 1), 0.0);
  for (const auto& g : out.gamma_draws)
    for (int t = 1; t < out.T; ++t)
      ppc[static_cast<std::size_t>(t - 1)] += g[static_cast<std::size_t>(t)];
  for (auto& p : ppc) p /= out.retained;
  return ppc;
}

// Bayesian false discovery rate of thresholding the PPC vector at h.
inline double bfdr(std::span<const double> ppc, double h) {
  if (h < 0.0 || h > 1.0) throw std::invalid_argument("bfdr: h in [0, 1]");
  double err = 0.0;
  double rejections = 0.0;
  for (double p : ppc)
    if (p > h) {
      err += 1.0 - p;
      rejections += 1.0;
    }
  return err / std::max(rejections, 1.0);
}

// Smallest threshold controlling the BFDR at the effective level (zeta,
// or zeta / 3 under the non-marginal correction). The BFDR is a step
// function of h, so the grid {0} + {observed PPC values} is exhaustive.
inline double optimal_threshold(std::span<const double> ppc, double zeta,
                                bool nonmarginal) {
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("optimal_threshold: zeta in (0, 1)");
  const double level = nonmarginal ? zeta / 3.0 : zeta;
  std::vector<double> grid(ppc.begin(), ppc.end());
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double h : grid)
    if (bfdr(ppc, h) <= level) return h;
  return 1.0;
}

inline std::vector<int> flagged_times(std::span<const double> ppc, double h) {
  std::vector<int> out;
  for (std::size_t j = 0; j < ppc.size(); ++j)
    if (ppc[j] > h) out.push_back(static_cast<int>(j) + 2);  // 1-based time
  return out;
}

// Binary decisions and truths over decision times 2..T.
struct DecisionVector {
  std::vector<int> d;
  std::vector<int> r;

  void validate() const {
    if (d.size() != r.size())
      throw std::invalid_argument("DecisionVector: length mismatch");
    for (int x : d)
      if (x != 0 && x != 1)
        throw std::invalid_argument("DecisionVector: d must be binary");
  }
};

struct CompoundLoss {
  double tpr = 0.0;
  double er = 0.0;
  double loss = 0.0;
};

// Compound changepoint loss -TPR + kappa * ER, where ER counts false
// detections over the {t-1, t, t+1} windows. `truth` may be binary or a
// PPC vector (posterior plug-in). D = 0 returns all zeros.
inline CompoundLoss compound_loss(std::span<const int> d,
                                  std::span<const double> truth,
                                  double kappa = 1.0) {
  if (d.size() != truth.size())
    throw std::invalid_argument("compound_loss: length mismatch");
  const std::size_t len = d.size();
  double D = 0.0;
  for (int x : d) D += x;
  CompoundLoss out;
  if (D == 0.0) return out;
  double tp = 0.0;
  for (std::size_t j = 0; j < len; ++j) tp += d[j] * truth[j];
  double er = 0.0;
  for (std::size_t j = 0; j + 1 < len; ++j) er += d[j] * (1.0 - truth[j]);
  for (std::size_t j = 0; j < len; ++j) er += d[j] * (1.0 - truth[j]);
  for (std::size_t j = 1; j < len; ++j) er += d[j] * (1.0 - truth[j]);
  out.tpr = tp / D;
  out.er = er / D;
  out.loss = -out.tpr + kappa * out.er;
  return out;
}

inline CompoundLoss compound_loss(const DecisionVector& dv, double kappa = 1.0) {
  dv.validate();
  std::vector<double> truth(dv.r.begin(), dv.r.end());
  return compound_loss(dv.d, truth, kappa);
}

// Mean co-clustering matrix over weighted candidate partitions.
inline Matrix similarity_matrix(std::span<const Partition> candidates,
                                std::span<const double> weights) {
  if (candidates.empty())
    throw std::invalid_argument("similarity_matrix: no draws");
  const int n = candidates[0].n();
  Matrix m(n);
  double total = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& p = candidates[c];
    const double w = weights.empty() ? 1.0 : weights[c];
    total += w;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (p.label(i) == p.label(j)) m(i, j) += w;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      m(i, j) /= total;
      m(j, i) = m(i, j);
    }
  return m;
}

inline Matrix similarity_matrix(std::span<const Partition> draws) {
  return similarity_matrix(draws, {});
}

// Lower bound of the posterior expected variation of information at a
// candidate allocation c, given co-clustering probabilities P (log2).
inline double vi_lower_bound(const Partition& c, const Matrix& P) {
  const int n = c.n();
  if (P.n != n) throw std::invalid_argument("vi_lower_bound: size mismatch");
  double lb = 0.0;
  for (int i = 0; i < n; ++i) {
    double same = 0.0, psum = 0.0, cross = 0.0;
    for (int j = 0; j < n; ++j) {
      const double pij = P(i, j);
      psum += pij;
      if (c.label(i) == c.label(j)) {
        same += 1.0;
        cross += pij;
      }
    }
    lb += std::log2(same) + std::log2(psum) - 2.0 * std::log2(cross);
  }
  return lb / n;
}

// Point-estimate partition: the VI lower-bound minimizer among the
// sampled candidates. Ties break toward fewer blocks, then lexicographic
// canonical labels.
inline Partition vi_point_estimate(std::span<const Partition> candidates,
                                   const Matrix& similarity) {
  if (candidates.empty())
    throw std::invalid_argument("vi_point_estimate: no candidates");
  std::size_t best = 0;
  double best_lb = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double lb = vi_lower_bound(candidates[c], similarity);
    bool better = lb < best_lb - 1e-12;
    if (!better && std::abs(lb - best_lb) <= 1e-12) {
      const auto& cur = candidates[c];
      const auto& inc = candidates[best];
      better = cur.num_blocks() < inc.num_blocks() ||
               (cur.num_blocks() == inc.num_blocks() &&
                std::lexicographical_compare(
                    cur.labels().begin(), cur.labels().end(),
                    inc.labels().begin(), inc.labels().end()));
    }
    if (better) {
      best = c;
      best_lb = lb;
    }
  }
  return candidates[best];
}

struct ChangepointMetrics {
  int tp = 0, fp = 0, fn = 0, tn = 0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
};

// Confusion counts over decision times 2..T; ratios with an empty
// denominator (no positives to recall, nothing detected) are defined as
// 1 so that perfect agreement always scores 1 across the board.
inline ChangepointMetrics changepoint_metrics(const std::set<int>& detected,
                                              const std::set<int>& truth,
                                              int T) {
  ChangepointMetrics m;
  for (int t = 2; t <= T; ++t) {
    const bool det = detected.count(t) > 0;
    const bool tru = truth.count(t) > 0;
    if (det && tru)
      ++m.tp;
    else if (det && !tru)
      ++m.fp;
    else if (!det && tru)
      ++m.fn;
    else
      ++m.tn;
  }
  auto ratio = [](double num, double den) { return den == 0.0 ? 1.0 : num / den; };
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.f1 = (m.precision + m.recall == 0.0)
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// Trapezoidal area under the ROC curve traced by thresholding the PPC
// vector. NaN when either class is empty.
inline double changepoint_auc(std::span<const double> ppc,
                              const std::set<int>& truth, int T) {
  if (static_cast<int>(ppc.size()) != T - 1)
    throw std::invalid_argument("changepoint_auc: ppc must have length T-1");
  double pos = 0.0, neg = 0.0;
  for (int t = 2; t <= T; ++t)
    (truth.count(t) ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  // Sweep thresholds from high to low; each unique PPC value adds a point.
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(ppc.size());
  for (std::size_t j = 0; j < ppc.size(); ++j)
    scored.emplace_back(ppc[j], truth.count(static_cast<int>(j) + 2) > 0);
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double auc = 0.0, tp = 0.0, fp = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  std::size_t j = 0;
  while (j < scored.size()) {
    const double h = scored[j].first;
    while (j < scored.size() && scored[j].first == h) {
      (scored[j].second ? tp : fp) += 1.0;
      ++j;
    }
    const double tpr = tp / pos, fpr = fp / neg;
    auc += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  auc += 0.5 * (1.0 - prev_fpr) * (1.0 + prev_tpr);
  return auc;
}

inline ChangepointMetrics changepoint_metrics(const std::set<int>& detected,
                                              const std::set<int>& truth,
                                              int T,
                                              std::span<const double> ppc) {
  ChangepointMetrics m = changepoint_metrics(detected, truth, T);
  m.auc = changepoint_auc(ppc, truth, T);
  return m;
}

// Full posterior summary of a chain run.
struct PosteriorSummary {
  std::vector<double> ppc;                  // decision times 2..T
  std::vector<Matrix> similarity;           // per time
  std::vector<Partition> point_partitions;  // per time
  std::vector<int> flagged;                 // 1-based times with ppc > h*
  double threshold = 1.0;
  std::vector<double> eta_mean;             // decision times 2..T
};

inline PosteriorSummary summarize(const ChainOutput& out, double zeta,
                                  bool nonmarginal) {
  PosteriorSummary s;
  s.ppc = compute_ppc(out);
  s.threshold = optimal_threshold(s.ppc, zeta, nonmarginal);
  s.flagged = flagged_times(s.ppc, s.threshold);
  s.eta_mean.assign(static_cast<std::size_t>(out.T - 1), 0.0);
  for (const auto& e : out.eta_draws)
    for (int t = 1; t < out.T; ++t)
      s.eta_mean[static_cast<std::size_t>(t - 1)] +=
          e[static_cast<std::size_t>(t)];
  for (auto& e : s.eta_mean) e /= out.retained;

  s.similarity.reserve(static_cast<std::size_t>(out.T));
  s.point_partitions.reserve(static_cast<std::size_t>(out.T));
  std::vector<Partition> cands;
  std::vector<double> weights;
  for (int t = 0; t < out.T; ++t) {
    cands.clear();
    weights.clear();
    for (const auto& [id, count] :
         out.unique_counts[static_cast<std::size_t>(t)]) {
      cands.push_back(out.pool[id]);
      weights.push_back(static_cast<double>(count));
    }
    Matrix sim = similarity_matrix(cands, weights);
    s.point_partitions.push_back(vi_point_estimate(cands, sim));
    s.similarity.push_back(std::move(sim));
  }
  return s;
}

}  // namespace dynpart
