#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynpart/partition.hpp"

namespace dynpart {

namespace detail {

// Contingency table between two partitions of the same n units.
struct Contingency {
  std::vector<std::vector<double>> cell;  // k_p x k_q joint counts
  std::vector<double> row;                // block sizes of p
  std::vector<double> col;                // block sizes of q
  double n = 0.0;
};

inline Contingency contingency(const Partition& p, const Partition& q) {
  if (p.n() != q.n())
    throw std::invalid_argument("partition metrics: size mismatch");
  Contingency c;
  const auto kp = static_cast<std::size_t>(p.num_blocks());
  const auto kq = static_cast<std::size_t>(q.num_blocks());
  c.cell.assign(kp, std::vector<double>(kq, 0.0));
  c.row.assign(kp, 0.0);
  c.col.assign(kq, 0.0);
  c.n = p.n();
  for (int i = 0; i < p.n(); ++i) {
    const auto a = static_cast<std::size_t>(p.label(i));
    const auto b = static_cast<std::size_t>(q.label(i));
    c.cell[a][b] += 1.0;
    c.row[a] += 1.0;
    c.col[b] += 1.0;
  }
  return c;
}

inline double choose2(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace detail

// Fraction of unit pairs on which the two partitions agree
// (together in both, or apart in both).
inline double rand_index(const Partition& p, const Partition& q) {
  if (p.n() < 2) throw std::invalid_argument("rand_index: need n >= 2");
  const auto c = detail::contingency(p, q);
  double s11 = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& r : c.cell)
    for (double v : r) s11 += detail::choose2(v);
  for (double v : c.row) sa += detail::choose2(v);
  for (double v : c.col) sb += detail::choose2(v);
  const double pairs = detail::choose2(c.n);
  return (pairs - sa - sb + 2.0 * s11) / pairs;
}

// Permutation-model adjusted Rand index. Equals 1 iff p == q; the 0/0
// case (both partitions trivial in the same way) is defined as 1.
inline double adjusted_rand_index(const Partition& p, const Partition& q) {
  if (p.n() < 2) throw std::invalid_argument("adjusted_rand_index: need n >= 2");
  const auto c = detail::contingency(p, q);
  double s11 = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& r : c.cell)
    for (double v : r) s11 += detail::choose2(v);
  for (double v : c.row) sa += detail::choose2(v);
  for (double v : c.col) sb += detail::choose2(v);
  const double pairs = detail::choose2(c.n);
  const double expected = sa * sb / pairs;
  const double denom = 0.5 * (sa + sb) - expected;
  if (denom == 0.0) return 1.0;
  return (s11 - expected) / denom;
}

// Variation of information H(p) + H(q) - 2 I(p, q), in bits.
inline double variation_of_information(const Partition& p,
                                       const Partition& q) {
  const auto c = detail::contingency(p, q);
  const double n = c.n;
  double hp = 0.0, hq = 0.0, mi = 0.0;
  for (double v : c.row)
    if (v > 0.0) hp -= (v / n) * std::log2(v / n);
  for (double v : c.col)
    if (v > 0.0) hq -= (v / n) * std::log2(v / n);
  for (std::size_t a = 0; a < c.cell.size(); ++a)
    for (std::size_t b = 0; b < c.cell[a].size(); ++b) {
      const double v = c.cell[a][b];
      if (v > 0.0)
        mi += (v / n) * std::log2(v * n / (c.row[a] * c.col[b]));
    }
  const double vi = hp + hq - 2.0 * mi;
  return vi < 0.0 ? 0.0 : vi;  // clamp tiny negative rounding
}

// Shannon entropy of the block-size distribution, natural log, so the
// value is non-negative (zero for a single block, log n for singletons).
inline double partition_entropy(const Partition& p) {
  const double n = p.n();
  double h = 0.0;
  for (int sz : p.block_sizes()) {
    const double f = sz / n;
    h -= f * std::log(f);
  }
  return h < 0.0 ? 0.0 : h;
}

}  // namespace dynpart
