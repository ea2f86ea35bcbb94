#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynpart/catalogue.hpp"
#include "dynpart/eppf.hpp"
#include "dynpart/normal_model.hpp"
#include "dynpart/partition.hpp"
#include "dynpart/partition_metrics.hpp"
#include "dynpart/rng.hpp"
#include "dynpart/version.hpp"

namespace dynpart {

// Beta(a, b) hyperprior on the per-time changepoint probabilities.
struct EtaPrior {
  double a = 0.1;
  double b = 0.9;

  void validate() const {
    if (!(a > 0.0 && b > 0.0))
      throw std::invalid_argument("EtaPrior: a and b must be > 0");
  }
  double mean() const { return a / (a + b); }
};

struct SamplerConfig {
  GibbsParams prior;
  ObsHyper hyper;
  EtaPrior eta_prior;
  int iterations = 10000;
  int burnin = 5000;
  int thin = 1;
  CatalogueConfig catalogue;
  int g_samples = 10000;       // prior draws for the g_t estimate
  int sir_candidates = 50;     // per member time of a gamma-block
  bool sir_proposal_correction = false;
  bool random_scan = false;
  bool retain_draws = true;    // keep per-iteration partition draws
  bool blockwise = false;      // iterate in blocks, checkpoint between them
  int block_iterations = 1000;
  std::string checkpoint_path;
  std::string resume_from;
  std::string trace_path;      // append-only (iteration, t, gamma, eta, k, H)
  std::uint64_t seed = 1;

  void validate() const {
    prior.validate();
    hyper.validate();
    eta_prior.validate();
    if (iterations <= burnin || burnin < 0)
      throw std::invalid_argument("SamplerConfig: need iterations > burnin >= 0");
    if (thin < 1) throw std::invalid_argument("SamplerConfig: thin >= 1");
    if (g_samples < 1)
      throw std::invalid_argument("SamplerConfig: g_samples >= 1");
    if (sir_candidates < 1)
      throw std::invalid_argument("SamplerConfig: sir_candidates >= 1");
    if (blockwise && block_iterations < 1)
      throw std::invalid_argument("SamplerConfig: block_iterations >= 1");
  }
};

// Live sampler state. Internal times are 0-based; gammas[t] and etas[t]
// are meaningful for t >= 1 (paper times 2..T), slot 0 is a placeholder.
struct ChainState {
  std::vector<std::uint32_t> partitions;  // interned ids, length T
  std::vector<int> gammas;                // length T
  std::vector<double> etas;               // length T
};

struct ChainOutput {
  int n = 0, T = 0, retained = 0;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  std::vector<std::string> warnings;

  std::vector<Partition> pool;  // id -> partition
  // Per-time retained draws as pool ids; empty when draws are not retained
  // (blockwise mode).
  std::vector<std::vector<std::uint32_t>> partition_draws;  // [T][retained]
  // Per-time counts of retained draws, insertion-ordered. Always filled;
  // sufficient for similarity matrices and point estimates.
  std::vector<std::vector<std::pair<std::uint32_t, int>>> unique_counts;
  std::vector<std::vector<std::int8_t>> gamma_draws;  // [retained][T]
  std::vector<std::vector<double>> eta_draws;         // [retained][T]

  const Partition& draw(int t, int j) const {
    return pool[partition_draws[static_cast<std::size_t>(t)]
                               [static_cast<std::size_t>(j)]];
  }
};

// Three-step Gibbs sampler over (pi_{1:T}, gamma_{2:T}, eta_{2:T}):
// joint partition/changepoint updates with boundary handling, conjugate
// eta updates, and a reshuffling SIR pass over the gamma-blocks.
class GibbsSampler {
 public:
  GibbsSampler(DataMatrix Y, SamplerConfig cfg)
      : Y_(std::move(Y)), cfg_(std::move(cfg)), rng_(0) {
    cfg_.validate();
    Y_.validate_finite();
    T_ = Y_.T();
    const Rng master(cfg_.seed);
    cat_ = build_catalogue(Y_, cfg_.hyper, cfg_.prior, cfg_.catalogue, master);
    Rng grng = master.substream(0x6E57);
    auto gest = estimate_g(Y_, cfg_.prior, cfg_.hyper, cfg_.g_samples, grng);
    cat_.log_g = std::move(gest.log_g);
    rng_ = master.substream(0x51EE9);
    init_state(master);
  }

  const Catalogue& catalogue() const { return cat_; }
  const ChainState& state() const { return state_; }
  ChainState& state() { return state_; }
  Rng& rng() { return rng_; }
  int T() const { return T_; }

  const Partition& partition_at(int t) const {
    return cat_.table[state_.partitions[static_cast<std::size_t>(t)]];
  }

  // Cached log p(Y_t | pi): the chain only ever visits interned ids, so a
  // dense per-time array indexed by id suffices.
  double loglik(int t, std::uint32_t id) {
    auto& arr = loglik_[static_cast<std::size_t>(t)];
    if (arr.size() <= id)
      arr.resize(cat_.table.size(), std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(arr[id]))
      arr[id] = partition_log_marginal(Y_.column(t), cat_.table[id], cfg_.hyper);
    return arr[id];
  }

  double log_eppf(std::uint32_t id) {
    if (eppf_.size() <= id)
      eppf_.resize(cat_.table.size(), std::numeric_limits<double>::quiet_NaN());
    if (std::isnan(eppf_[id]))
      eppf_[id] = eppf_log_prob(cat_.table[id], cfg_.prior);
    return eppf_[id];
  }

  // Step 1.1. For interior times the update conditions on the changepoint
  // indicator one step ahead: a 0 there makes the full conditional
  // degenerate at pi_{t+1}; a 1 reduces it to the keep-or-redraw mixture
  // with weights (1 - eta_t) p(Y_t | pi_{t-1}) and eta_t g_t.
  void update_partition(int t) {
    auto& pi = state_.partitions;
    const auto tu = static_cast<std::size_t>(t);
    if (t < T_ - 1 && state_.gammas[tu + 1] == 0) {
      pi[tu] = pi[tu + 1];
      return;
    }
    if (t == 0) {
      pi[0] = draw_from_catalogue(0);
      return;
    }
    const double eta = state_.etas[tu];
    double p_new;
    if (eta <= 0.0) {
      p_new = 0.0;
    } else if (eta >= 1.0) {
      p_new = 1.0;
    } else {
      const double w_keep = std::log1p(-eta) + loglik(t, pi[tu - 1]);
      const double w_new = std::log(eta) + cat_.log_g[tu];
      p_new = 1.0 / (1.0 + std::exp(w_keep - w_new));
    }
    pi[tu] = rng_.bernoulli(p_new) ? draw_from_catalogue(t) : pi[tu - 1];
  }

  // Step 1.2: gamma_t | pi_t. Deterministically 1 whenever the partition
  // moved; otherwise Bernoulli with odds eta_t p*(pi_t) : (1 - eta_t).
  void update_gamma(int t) {
    const auto tu = static_cast<std::size_t>(t);
    if (state_.partitions[tu] != state_.partitions[tu - 1]) {
      state_.gammas[tu] = 1;
      return;
    }
    const double eta = state_.etas[tu];
    double p1;
    if (eta <= 0.0) {
      p1 = 0.0;
    } else if (eta >= 1.0) {
      p1 = 1.0;
    } else {
      const double w1 = std::log(eta) + log_eppf(state_.partitions[tu]);
      const double w0 = std::log1p(-eta);
      p1 = 1.0 / (1.0 + std::exp(w0 - w1));
    }
    state_.gammas[tu] = rng_.bernoulli(p1) ? 1 : 0;
  }

  // Step 2: conjugate Beta(a + gamma_t, b + 1 - gamma_t).
  void update_eta(int t) {
    const auto tu = static_cast<std::size_t>(t);
    state_.etas[tu] = rng_.beta(cfg_.eta_prior.a + state_.gammas[tu],
                                cfg_.eta_prior.b + 1.0 - state_.gammas[tu]);
  }

  // Step 3: reshuffling SIR. The gammas partition 1..T into blocks of
  // identical partitions; singleton blocks refresh straight from their
  // catalogue, larger blocks resample one winner among catalogue
  // candidates weighted by the block's full conditional.
  void reshuffle() {
    int start = 0;
    for (int t = 1; t <= T_; ++t) {
      if (t == T_ || state_.gammas[static_cast<std::size_t>(t)] == 1) {
        reshuffle_block(start, t - 1);
        start = t;
      }
    }
  }

  void sweep() {
    if (cfg_.random_scan) {
      for (int t : rng_.permutation(T_)) {
        update_partition(t);
        if (t >= 1) update_gamma(t);
      }
    } else {
      for (int t = 0; t < T_; ++t) {
        update_partition(t);
        if (t >= 1) update_gamma(t);
      }
    }
    for (int t = 1; t < T_; ++t) update_eta(t);
    reshuffle();
  }

  ChainOutput run();

  void save_checkpoint(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os << kCheckpointFormatVersion << '\n';
    os << "iteration " << iteration_ << '\n';
    os << "n " << Y_.n() << " T " << T_ << '\n';
    os << "rng " << rng_ << '\n';
    for (int t = 0; t < T_; ++t) {
      const auto& p = partition_at(t);
      for (int i = 0; i < p.n(); ++i) os << (i ? " " : "") << p.label(i);
      os << '\n';
    }
    for (int t = 0; t < T_; ++t)
      os << (t ? " " : "") << state_.gammas[static_cast<std::size_t>(t)];
    os << '\n';
    os.precision(17);
    for (int t = 0; t < T_; ++t)
      os << (t ? " " : "") << state_.etas[static_cast<std::size_t>(t)];
    os << '\n';
  }

  void load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
    std::string line;
    std::getline(is, line);
    if (line != kCheckpointFormatVersion)
      throw std::runtime_error("checkpoint version mismatch: " + line);
    std::string key;
    int n = 0, t_count = 0;
    is >> key >> iteration_;
    is >> key >> n >> key >> t_count;
    if (n != Y_.n() || t_count != T_)
      throw std::runtime_error("checkpoint dimensions do not match the data");
    is >> key >> rng_;
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int t = 0; t < T_; ++t) {
      for (auto& l : labels) is >> l;
      state_.partitions[static_cast<std::size_t>(t)] =
          cat_.table.intern(Partition::from_labels(labels));
    }
    for (int t = 0; t < T_; ++t) is >> state_.gammas[static_cast<std::size_t>(t)];
    for (int t = 0; t < T_; ++t) is >> state_.etas[static_cast<std::size_t>(t)];
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::uint32_t draw_from_catalogue(int t) {
    const auto& ids = cat_.draws[static_cast<std::size_t>(t)];
    return ids[rng_.uniform_index(ids.size())];
  }

  void init_state(const Rng& master) {
    Rng init = master.substream(0x1117);
    state_.partitions.resize(static_cast<std::size_t>(T_));
    state_.gammas.assign(static_cast<std::size_t>(T_), 1);
    state_.etas.assign(static_cast<std::size_t>(T_), cfg_.eta_prior.mean());
    for (int t = 0; t < T_; ++t) {
      const auto& ids = cat_.draws[static_cast<std::size_t>(t)];
      state_.partitions[static_cast<std::size_t>(t)] =
          ids[init.uniform_index(ids.size())];
    }
    for (int t = 1; t < T_; ++t)
      state_.gammas[static_cast<std::size_t>(t)] =
          state_.partitions[static_cast<std::size_t>(t)] ==
                  state_.partitions[static_cast<std::size_t>(t - 1)]
              ? 0
              : 1;
    loglik_.assign(static_cast<std::size_t>(T_), {});
  }

  void reshuffle_block(int s, int e) {
    if (s == e) {
      state_.partitions[static_cast<std::size_t>(s)] = draw_from_catalogue(s);
      return;
    }
    candidate_ids_.clear();
    for (int l = s; l <= e; ++l) {
      const auto& ids = cat_.draws[static_cast<std::size_t>(l)];
      for (int r = 0; r < cfg_.sir_candidates; ++r)
        candidate_ids_.push_back(ids[rng_.uniform_index(ids.size())]);
    }
    candidate_logw_.resize(candidate_ids_.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidate_ids_.size(); ++c) {
      const auto id = candidate_ids_[c];
      double w = log_eppf(id);
      for (int l = s; l <= e; ++l) w += loglik(l, id);
      if (cfg_.sir_proposal_correction) w -= log_proposal_mass(id, s, e);
      candidate_logw_[c] = w;
      mx = std::max(mx, w);
    }
    if (!std::isfinite(mx)) {
      warnings_.push_back("reshuffle: all candidate weights underflowed in block [" +
                          std::to_string(s + 1) + "," + std::to_string(e + 1) +
                          "]; keeping current value");
      return;
    }
    const auto win = rng_.categorical_from_log(candidate_logw_);
    for (int l = s; l <= e; ++l)
      state_.partitions[static_cast<std::size_t>(l)] = candidate_ids_[win];
  }

  // Mixture mass of the pooled catalogue proposal at an id, used by the
  // optional importance correction.
  double log_proposal_mass(std::uint32_t id, int s, int e) {
    if (cat_counts_.empty()) {
      cat_counts_.resize(static_cast<std::size_t>(T_));
      for (int t = 0; t < T_; ++t)
        for (auto i : cat_.draws[static_cast<std::size_t>(t)])
          ++cat_counts_[static_cast<std::size_t>(t)][i];
    }
    double mass = 0.0;
    for (int l = s; l <= e; ++l) {
      const auto& counts = cat_counts_[static_cast<std::size_t>(l)];
      auto it = counts.find(id);
      if (it != counts.end())
        mass += static_cast<double>(it->second) /
                static_cast<double>(cat_.draws[static_cast<std::size_t>(l)].size());
    }
    return std::log(mass) - std::log(static_cast<double>(e - s + 1));
  }

  DataMatrix Y_;
  SamplerConfig cfg_;
  int T_ = 0;
  Catalogue cat_;
  ChainState state_;
  Rng rng_;
  long iteration_ = 0;
  std::vector<std::vector<double>> loglik_;  // [t][id]
  std::vector<double> eppf_;                 // [id]
  std::vector<std::unordered_map<std::uint32_t, int>> cat_counts_;
  std::vector<std::uint32_t> candidate_ids_;
  std::vector<double> candidate_logw_;
  std::vector<std::string> warnings_;
};

inline ChainOutput GibbsSampler::run() {
  const auto t_start = std::chrono::steady_clock::now();
  ChainOutput out;
  out.n = Y_.n();
  out.T = T_;
  out.seed = cfg_.seed;
  out.warnings = cat_.warnings;

  if (!cfg_.resume_from.empty()) load_checkpoint(cfg_.resume_from);

  const bool retain = cfg_.retain_draws && !cfg_.blockwise;
  if (retain) out.partition_draws.resize(static_cast<std::size_t>(T_));
  out.unique_counts.resize(static_cast<std::size_t>(T_));
  std::vector<std::unordered_map<std::uint32_t, std::size_t>> count_pos(
      static_cast<std::size_t>(T_));

  std::ofstream trace;
  if (!cfg_.trace_path.empty()) {
    trace.open(cfg_.trace_path, std::ios::app);
    if (!trace)
      throw std::runtime_error("cannot open trace file: " + cfg_.trace_path);
    if (trace.tellp() == 0)
      trace << "# " << kCsvFormatVersion << " trace\n"
            << "iteration,t,gamma,eta,k,entropy\n";
  }

  auto retain_iteration = [&] {
    ++out.retained;
    std::vector<std::int8_t> gam(static_cast<std::size_t>(T_), 0);
    for (int t = 1; t < T_; ++t)
      gam[static_cast<std::size_t>(t)] =
          static_cast<std::int8_t>(state_.gammas[static_cast<std::size_t>(t)]);
    out.gamma_draws.push_back(std::move(gam));
    out.eta_draws.push_back(state_.etas);
    for (int t = 0; t < T_; ++t) {
      const auto tu = static_cast<std::size_t>(t);
      const auto id = state_.partitions[tu];
      if (retain) out.partition_draws[tu].push_back(id);
      auto [it, inserted] =
          count_pos[tu].try_emplace(id, out.unique_counts[tu].size());
      if (inserted)
        out.unique_counts[tu].emplace_back(id, 1);
      else
        ++out.unique_counts[tu][it->second].second;
    }
    if (trace.is_open()) {
      for (int t = 0; t < T_; ++t) {
        const auto& p = partition_at(t);
        trace << iteration_ << ',' << (t + 1) << ','
              << state_.gammas[static_cast<std::size_t>(t)] << ','
              << state_.etas[static_cast<std::size_t>(t)] << ','
              << p.num_blocks() << ',' << partition_entropy(p) << '\n';
      }
    }
  };

  const long total = cfg_.iterations;
  while (iteration_ < total) {
    const long block_end =
        cfg_.blockwise
            ? std::min<long>(total, iteration_ + cfg_.block_iterations)
            : total;
    while (iteration_ < block_end) {
      ++iteration_;
      sweep();
      if (iteration_ > cfg_.burnin &&
          (iteration_ - cfg_.burnin - 1) % cfg_.thin == 0)
        retain_iteration();
    }
    if (cfg_.blockwise && !cfg_.checkpoint_path.empty())
      save_checkpoint(cfg_.checkpoint_path);
  }

  out.pool.reserve(cat_.table.size());
  for (std::uint32_t id = 0; id < cat_.table.size(); ++id)
    out.pool.push_back(cat_.table[id]);
  for (const auto& w : warnings_) out.warnings.push_back(w);
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

inline ChainOutput run_chain(const DataMatrix& Y, const SamplerConfig& cfg) {
  GibbsSampler sampler(Y, cfg);
  return sampler.run();
}

struct TwoViewResult {
  // Posterior probability that the two views have different partitions.
  double change_probability = 0.0;
  double eta_posterior_mean = 0.0;
  ChainOutput output;
};

// Two views of the same units treated as a two-step chain; the posterior
// change probability is the mean of the retained gamma_2 draws.
inline TwoViewResult run_two_view(std::span<const double> y1,
                                  std::span<const double> y2,
                                  SamplerConfig cfg) {
  if (y1.size() != y2.size() || y1.empty())
    throw std::invalid_argument("run_two_view: views must share n >= 1 units");
  DataMatrix Y(static_cast<int>(y1.size()), 2);
  for (std::size_t i = 0; i < y1.size(); ++i) {
    Y.at(static_cast<int>(i), 0) = y1[i];
    Y.at(static_cast<int>(i), 1) = y2[i];
  }
  TwoViewResult res;
  res.output = run_chain(Y, cfg);
  double gsum = 0.0, esum = 0.0;
  for (const auto& g : res.output.gamma_draws) gsum += g[1];
  for (const auto& e : res.output.eta_draws) esum += e[1];
  res.change_probability = gsum / res.output.retained;
  res.eta_posterior_mean = esum / res.output.retained;
  return res;
}

}  // namespace dynpart
