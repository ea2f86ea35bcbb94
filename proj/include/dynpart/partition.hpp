#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dynpart {

// Set partition of n units, stored as cluster labels in canonical
// first-appearance form: labels[0] == 0 and every new label is exactly
// one past the current maximum. Two Partition values describe the same
// set partition iff their label sequences are identical, so operator==
// implements the point mass used by the state equation.
class Partition {
 public:
  Partition() = default;

  // Canonical relabeling of an arbitrary label sequence. Idempotent.
  static Partition from_labels(std::span<const int> raw) {
    if (raw.empty())
      throw std::invalid_argument("Partition: empty label sequence");
    Partition p;
    p.labels_.resize(raw.size());
    std::vector<std::pair<int, int>> seen;  // (raw label, canonical id)
    for (std::size_t i = 0; i < raw.size(); ++i) {
      int canon = -1;
      for (const auto& [r, c] : seen) {
        if (r == raw[i]) {
          canon = c;
          break;
        }
      }
      if (canon < 0) {
        canon = static_cast<int>(seen.size());
        seen.emplace_back(raw[i], canon);
      }
      p.labels_[i] = canon;
    }
    p.k_ = static_cast<int>(seen.size());
    return p;
  }

  static Partition from_labels(const std::vector<int>& raw) {
    return from_labels(std::span<const int>(raw));
  }

  // All units in one block.
  static Partition single_block(int n) {
    Partition p;
    p.labels_.assign(static_cast<std::size_t>(n), 0);
    p.k_ = 1;
    return p;
  }

  // Every unit its own block.
  static Partition singletons(int n) {
    Partition p;
    p.labels_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p.labels_[static_cast<std::size_t>(i)] = i;
    p.k_ = n;
    return p;
  }

  int n() const { return static_cast<int>(labels_.size()); }
  int num_blocks() const { return k_; }
  int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  std::span<const int> labels() const { return labels_; }

  std::vector<int> block_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(k_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  std::vector<std::vector<int>> blocks() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k_));
    for (int i = 0; i < n(); ++i)
      out[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)])]
          .push_back(i);
    return out;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (i) s += '.';
      s += std::to_string(labels_[i]);
    }
    return s;
  }

  friend bool operator==(const Partition& a, const Partition& b) = default;
  friend auto operator<=>(const Partition& a, const Partition& b) = default;

 private:
  std::vector<int> labels_;
  int k_ = 0;
};

inline Partition canonicalize(std::span<const int> raw_labels) {
  return Partition::from_labels(raw_labels);
}
inline Partition canonicalize(const std::vector<int>& raw_labels) {
  return Partition::from_labels(raw_labels);
}

struct PartitionHash {
  std::size_t operator()(const Partition& p) const {
    // FNV-1a over the canonical labels.
    std::uint64_t h = 1469598103934665603ULL;
    for (int l : p.labels()) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(l));
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// All Bell(n) partitions of n units, generated as restricted growth
// strings so every element is already canonical. Exhaustive oracle for
// small n; the cap guards against accidental exponential blowups.
inline std::vector<Partition> enumerate_partitions(int n, int cap = 10) {
  if (n < 1) throw std::invalid_argument("enumerate_partitions: n must be >= 1");
  if (n > cap)
    throw std::invalid_argument("enumerate_partitions: n exceeds cap");
  std::vector<Partition> out;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int i, int mx) -> void {
    if (i == n) {
      out.push_back(Partition::from_labels(labels));
      return;
    }
    for (int l = 0; l <= mx + 1; ++l) {
      labels[static_cast<std::size_t>(i)] = l;
      self(self, i + 1, std::max(mx, l));
    }
  };
  rec(rec, 1, 0);
  return out;
}

}  // namespace dynpart
