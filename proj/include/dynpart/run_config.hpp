#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dynpart/catalogue.hpp"
#include "dynpart/eppf.hpp"
#include "dynpart/sampler.hpp"

namespace dynpart {

// Everything a fit needs, flat so the CLI and config files map onto it
// one to one. Defaults follow the independent-data study setup: theta = 1
// CRP base, Beta(0.1, 0.9) changepoint prior, kernel and base variances
// fixed at the Inv-Gamma(15, 3) prior mean.
struct RunConfig {
  // model
  double theta = 1.0;
  double expected_clusters = 0.0;  // > 0 calibrates theta from this instead
  double sigma = 0.0;
  double eta_a = 0.1;
  double eta_b = 0.9;
  double tau2 = 3.0 / 14.0;
  double sigma02 = 3.0 / 14.0;
  double mu0 = 0.0;
  bool adapt_variances = false;  // pre-phase re-estimation of tau2/sigma02
  double tau2_prior_shape = 15.0, tau2_prior_rate = 3.0;
  double sigma02_prior_shape = 15.0, sigma02_prior_rate = 3.0;
  int adapt_iterations = 200;

  // sampler
  int iterations = 10000;
  int burnin = 5000;
  int thin = 1;
  int catalogue_draws = 2000;
  int catalogue_burnin = 500;
  int g_samples = 10000;
  int sir_candidates = 50;
  bool sir_proposal_correction = false;
  bool random_scan = false;
  bool blockwise = false;
  int block_iterations = 1000;
  int threads = 1;

  // decision
  double zeta = 0.01;
  bool nonmarginal = true;
  double kappa = 1.0;

  std::uint64_t seed = 1;

  // I/O
  std::string data_path;
  bool long_format = false;
  std::string out_dir;
  std::string checkpoint_path;
  std::string resume_from;
  bool write_similarity = false;
  bool write_trace = true;

  void validate() const {
    if (expected_clusters == 0.0) {
      GibbsParams{theta, sigma}.validate();
    } else if (!(expected_clusters > 1.0)) {
      throw std::invalid_argument("RunConfig: expected_clusters must be > 1");
    }
    if (!(zeta > 0.0 && zeta < 1.0))
      throw std::invalid_argument("RunConfig: zeta must be in (0, 1)");
    if (iterations <= burnin || burnin < 0)
      throw std::invalid_argument("RunConfig: need iterations > burnin >= 0");
    if (thin < 1) throw std::invalid_argument("RunConfig: thin must be >= 1");
  }

  GibbsParams resolve_prior(int n) const {
    if (expected_clusters > 0.0)
      return GibbsParams{solve_theta(n, expected_clusters, sigma), sigma};
    return GibbsParams{theta, sigma};
  }

  SamplerConfig sampler_config(const GibbsParams& prior,
                               const ObsHyper& hyper) const {
    SamplerConfig s;
    s.prior = prior;
    s.hyper = hyper;
    s.eta_prior = EtaPrior{eta_a, eta_b};
    s.iterations = iterations;
    s.burnin = burnin;
    s.thin = thin;
    s.catalogue = CatalogueConfig{catalogue_draws, catalogue_burnin, threads};
    s.g_samples = g_samples;
    s.sir_candidates = sir_candidates;
    s.sir_proposal_correction = sir_proposal_correction;
    s.random_scan = random_scan;
    s.blockwise = blockwise;
    s.block_iterations = block_iterations;
    s.checkpoint_path = checkpoint_path;
    s.resume_from = resume_from;
    s.seed = seed;
    return s;
  }
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["theta"] = c.theta;
  j["expected_clusters"] = c.expected_clusters;
  j["sigma"] = c.sigma;
  j["eta_a"] = c.eta_a;
  j["eta_b"] = c.eta_b;
  j["tau2"] = c.tau2;
  j["sigma02"] = c.sigma02;
  j["mu0"] = c.mu0;
  j["adapt_variances"] = c.adapt_variances;
  j["tau2_prior_shape"] = c.tau2_prior_shape;
  j["tau2_prior_rate"] = c.tau2_prior_rate;
  j["sigma02_prior_shape"] = c.sigma02_prior_shape;
  j["sigma02_prior_rate"] = c.sigma02_prior_rate;
  j["adapt_iterations"] = c.adapt_iterations;
  j["iterations"] = c.iterations;
  j["burnin"] = c.burnin;
  j["thin"] = c.thin;
  j["catalogue_draws"] = c.catalogue_draws;
  j["catalogue_burnin"] = c.catalogue_burnin;
  j["g_samples"] = c.g_samples;
  j["sir_candidates"] = c.sir_candidates;
  j["sir_proposal_correction"] = c.sir_proposal_correction;
  j["random_scan"] = c.random_scan;
  j["blockwise"] = c.blockwise;
  j["block_iterations"] = c.block_iterations;
  j["threads"] = c.threads;
  j["zeta"] = c.zeta;
  j["nonmarginal"] = c.nonmarginal;
  j["kappa"] = c.kappa;
  j["seed"] = c.seed;
  j["data_path"] = c.data_path;
  j["long_format"] = c.long_format;
  j["write_similarity"] = c.write_similarity;
  j["write_trace"] = c.write_trace;
  return j;
}

}  // namespace dynpart
