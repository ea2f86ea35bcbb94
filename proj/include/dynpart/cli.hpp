#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynpart/csv.hpp"
#include "dynpart/decision.hpp"
#include "dynpart/psm.hpp"
#include "dynpart/run_config.hpp"
#include "dynpart/sampler.hpp"
#include "dynpart/synthetic.hpp"
#include "dynpart/version.hpp"

namespace dynpart {

namespace detail {

inline void write_table_header(std::ofstream& os, const std::string& kind,
                               std::uint64_t seed,
                               const nlohmann::json& config_echo) {
  os << "# " << kCsvFormatVersion << ' ' << kind << '\n';
  os << "# seed=" << seed << " config=" << config_echo.dump() << '\n';
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path.string());
  return os;
}

}  // namespace detail

// --- simulate -----------------------------------------------------------

struct SimulateArgs {
  std::string kind;  // "independent" or "ar1"
  int n = 0;         // 0 = generator default
  int T = 0;
  double lambda = 0.9;
  std::uint64_t seed = 1;
  std::string out_data;
  std::string out_truth;
};

inline void cmd_simulate(const SimulateArgs& args) {
  DataMatrix Y;
  Scenario sc;
  if (args.kind == "independent") {
    const int n = args.n > 0 ? args.n : 20;
    const int T = args.T > 0 ? args.T : 100;
    std::tie(Y, sc) = gen_independent(n, T, args.seed);
  } else if (args.kind == "ar1") {
    const int n = args.n > 0 ? args.n : 20;
    const int T = args.T > 0 ? args.T : 30;
    std::tie(Y, sc) = gen_ar1(n, T, args.lambda, args.seed);
  } else {
    throw std::invalid_argument("simulate: unknown generator '" + args.kind +
                                "'");
  }
  write_data_csv(args.out_data, Y, "simulated " + args.kind);
  write_json(args.out_truth, scenario_to_json(sc));
}

// --- fit ----------------------------------------------------------------

struct FitResult {
  ChainOutput output;
  PosteriorSummary summary;
  GibbsParams prior;
  ObsHyper hyper;
};

inline FitResult cmd_fit(RunConfig cfg) {
  cfg.validate();
  if (cfg.data_path.empty())
    throw std::invalid_argument("fit: --data is required");
  if (cfg.out_dir.empty())
    throw std::invalid_argument("fit: --out-dir is required");
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);

  DataMatrix Y = cfg.long_format ? read_data_csv_long(cfg.data_path)
                                 : read_data_csv(cfg.data_path);

  FitResult res;
  res.prior = cfg.resolve_prior(Y.n());
  res.hyper = ObsHyper{cfg.tau2, cfg.mu0, cfg.sigma02};
  if (cfg.adapt_variances) {
    Rng arng = Rng(cfg.seed).substream(0xADA7);
    const auto av = adapt_variances(
        Y, res.prior, VariancePrior{cfg.tau2_prior_shape, cfg.tau2_prior_rate},
        VariancePrior{cfg.sigma02_prior_shape, cfg.sigma02_prior_rate},
        cfg.mu0, cfg.adapt_iterations, arng);
    res.hyper.tau2 = av.tau2;
    res.hyper.sigma02 = av.sigma02;
  }

  SamplerConfig scfg = cfg.sampler_config(res.prior, res.hyper);
  if (cfg.write_trace) {
    const auto trace = out / "trace.csv";
    std::filesystem::remove(trace);  // the sampler appends
    scfg.trace_path = trace.string();
  }
  if (cfg.blockwise && scfg.checkpoint_path.empty())
    scfg.checkpoint_path = (out / "checkpoint.txt").string();

  res.output = run_chain(Y, scfg);
  res.summary = summarize(res.output, cfg.zeta, cfg.nonmarginal);

  nlohmann::json echo = run_config_to_json(cfg);
  echo["resolved_theta"] = res.prior.theta;
  echo["resolved_tau2"] = res.hyper.tau2;
  echo["resolved_sigma02"] = res.hyper.sigma02;

  {
    auto os = detail::open_out(out / "ppc.csv");
    detail::write_table_header(os, "ppc", cfg.seed, echo);
    os << "t,ppc,flagged\n";
    const std::set<int> flags(res.summary.flagged.begin(),
                              res.summary.flagged.end());
    for (std::size_t j = 0; j < res.summary.ppc.size(); ++j) {
      const int t = static_cast<int>(j) + 2;
      os << t << ',' << detail::format_double(res.summary.ppc[j]) << ','
         << (flags.count(t) ? 1 : 0) << '\n';
    }
  }
  {
    auto os = detail::open_out(out / "etas.csv");
    detail::write_table_header(os, "etas", cfg.seed, echo);
    os << "t,mean,sd\n";
    for (int t = 1; t < res.output.T; ++t) {
      double m = 0.0, s2 = 0.0;
      for (const auto& e : res.output.eta_draws)
        m += e[static_cast<std::size_t>(t)];
      m /= res.output.retained;
      for (const auto& e : res.output.eta_draws) {
        const double d = e[static_cast<std::size_t>(t)] - m;
        s2 += d * d;
      }
      s2 /= res.output.retained;
      os << (t + 1) << ',' << detail::format_double(m) << ','
         << detail::format_double(std::sqrt(s2)) << '\n';
    }
  }
  {
    auto os = detail::open_out(out / "partitions.csv");
    detail::write_table_header(os, "partitions", cfg.seed, echo);
    os << "t,unit,cluster\n";
    for (int t = 0; t < res.output.T; ++t) {
      const auto& p = res.summary.point_partitions[static_cast<std::size_t>(t)];
      for (int i = 0; i < p.n(); ++i)
        os << (t + 1) << ',' << (i + 1) << ',' << p.label(i) << '\n';
    }
  }
  if (cfg.write_similarity) {
    for (int t = 0; t < res.output.T; ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "similarity_%04d.csv", t + 1);
      auto os = detail::open_out(out / name);
      detail::write_table_header(os, "similarity", cfg.seed, echo);
      const auto& m = res.summary.similarity[static_cast<std::size_t>(t)];
      for (int i = 0; i < m.n; ++i) {
        for (int j = 0; j < m.n; ++j)
          os << (j ? "," : "") << detail::format_double(m(i, j));
        os << '\n';
      }
    }
  }
  {
    nlohmann::json j;
    j["format"] = "dynpart-fit-summary";
    j["format_version"] = kSummaryFormatVersion;
    j["dynpart_version"] = kVersion;
    j["seed"] = cfg.seed;
    j["n"] = res.output.n;
    j["T"] = res.output.T;
    j["retained"] = res.output.retained;
    j["threshold"] = res.summary.threshold;
    j["flagged"] = res.summary.flagged;
    j["config"] = echo;
    j["warnings"] = res.output.warnings;
    j["runtime_seconds"] = res.output.runtime_seconds;
    write_json((out / "summary.json").string(), j);
  }
  for (const auto& w : res.output.warnings) std::cerr << "warning: " << w << '\n';
  return res;
}

// --- metrics ------------------------------------------------------------

struct MetricsArgs {
  std::vector<std::string> run_dirs;     // fit output directories
  std::vector<std::string> truth_paths;  // paired with run_dirs (or size 1)
  std::string detected_path;             // raw mode: CSV list of times
  std::string out_path;                  // optional CSV output
};

struct MetricsRow {
  ChangepointMetrics cp;
  double mean_ari = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<double> read_ppc_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<double> ppc;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 2) continue;
    double t, p;
    if (parse_double(f[0], t) && parse_double(f[1], p)) ppc.push_back(p);
  }
  return ppc;
}

inline std::vector<Partition> read_partitions_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::map<int, std::map<int, int>> rows;  // t -> unit -> cluster
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    const auto f = split_csv_line(line);
    double t, u, c;
    if (f.size() == 3 && parse_double(f[0], t) && parse_double(f[1], u) &&
        parse_double(f[2], c))
      rows[static_cast<int>(t)][static_cast<int>(u)] = static_cast<int>(c);
  }
  std::vector<Partition> out;
  for (const auto& [t, units] : rows) {
    std::vector<int> labels;
    labels.reserve(units.size());
    for (const auto& [u, c] : units) labels.push_back(c);
    out.push_back(Partition::from_labels(labels));
  }
  return out;
}

inline MetricsRow metrics_for_run(const std::string& run_dir,
                                  const Scenario& truth) {
  const std::filesystem::path dir(run_dir);
  const auto summary = read_json((dir / "summary.json").string());
  const int T = summary.at("T").get<int>();
  if (T != truth.T)
    throw std::invalid_argument("metrics: run horizon T=" + std::to_string(T) +
                                " does not match truth T=" +
                                std::to_string(truth.T));
  std::set<int> detected;
  for (int t : summary.at("flagged").get<std::vector<int>>())
    detected.insert(t);
  MetricsRow row;
  const auto ppc = read_ppc_csv((dir / "ppc.csv").string());
  if (static_cast<int>(ppc.size()) == T - 1)
    row.cp = changepoint_metrics(detected, truth.true_changepoints, T, ppc);
  else
    row.cp = changepoint_metrics(detected, truth.true_changepoints, T);
  const auto points = read_partitions_csv((dir / "partitions.csv").string());
  if (static_cast<int>(points.size()) == T) {
    double ari = 0.0;
    for (int t = 0; t < T; ++t)
      ari += adjusted_rand_index(points[static_cast<std::size_t>(t)],
                                 truth.true_partitions[static_cast<std::size_t>(t)]);
    row.mean_ari = ari / T;
  }
  return row;
}

}  // namespace detail

inline void cmd_metrics(const MetricsArgs& args, std::ostream& report) {
  if (args.truth_paths.empty())
    throw std::invalid_argument("metrics: --truth is required");
  std::vector<MetricsRow> rows;
  if (!args.detected_path.empty()) {
    // Raw mode: a file with one detected time per line.
    const Scenario truth =
        scenario_from_json(read_json(args.truth_paths.front()));
    if (truth.true_changepoints.empty() && truth.T == 0)
      throw std::invalid_argument("metrics: empty truth");
    std::ifstream is(args.detected_path);
    if (!is) throw std::runtime_error("cannot open " + args.detected_path);
    std::set<int> detected;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      detected.insert(std::stoi(line));
    }
    MetricsRow row;
    row.cp = changepoint_metrics(detected, truth.true_changepoints, truth.T);
    rows.push_back(row);
  } else {
    if (args.run_dirs.empty())
      throw std::invalid_argument("metrics: provide --run or --detected");
    if (args.truth_paths.size() != args.run_dirs.size() &&
        args.truth_paths.size() != 1)
      throw std::invalid_argument(
          "metrics: --truth must be given once or once per run");
    for (std::size_t r = 0; r < args.run_dirs.size(); ++r) {
      const auto& truth_path = args.truth_paths.size() == 1
                                   ? args.truth_paths.front()
                                   : args.truth_paths[r];
      const Scenario truth = scenario_from_json(read_json(truth_path));
      rows.push_back(detail::metrics_for_run(args.run_dirs[r], truth));
    }
  }

  struct Entry {
    const char* name;
    std::vector<double> values;
  };
  std::vector<Entry> entries = {{"specificity", {}}, {"accuracy", {}},
                                {"recall", {}},      {"precision", {}},
                                {"f1", {}},          {"auc", {}},
                                {"ari", {}}};
  for (const auto& row : rows) {
    entries[0].values.push_back(row.cp.specificity);
    entries[1].values.push_back(row.cp.accuracy);
    entries[2].values.push_back(row.cp.recall);
    entries[3].values.push_back(row.cp.precision);
    entries[4].values.push_back(row.cp.f1);
    entries[5].values.push_back(row.cp.auc);
    entries[6].values.push_back(row.mean_ari);
  }
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0;
    int k = 0;
    for (double x : v)
      if (!std::isnan(x)) {
        m += x;
        ++k;
      }
    if (k == 0) return std::pair<double, double>{
        std::numeric_limits<double>::quiet_NaN(),
        std::numeric_limits<double>::quiet_NaN()};
    m /= k;
    double s2 = 0.0;
    for (double x : v)
      if (!std::isnan(x)) s2 += (x - m) * (x - m);
    return std::pair<double, double>{m, k > 1 ? std::sqrt(s2 / (k - 1)) : 0.0};
  };

  report << "measure,mean,sd\n";
  std::string csv = "measure,mean,sd\n";
  for (const auto& e : entries) {
    const auto [m, s] = mean_sd(e.values);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f\n", e.name, m, s);
    report << buf;
    csv += buf;
  }
  if (!args.out_path.empty()) {
    auto os = detail::open_out(args.out_path);
    os << "# " << kCsvFormatVersion << " metrics\n" << csv;
  }
}

// --- eri ----------------------------------------------------------------

struct EriArgs {
  double theta = 1.0;
  double sigma = 0.0;
  double eta = 0.5;
  int lag = 1;
  int mc_draws = 0;   // > 0 adds a Monte Carlo estimate
  int n = 8;
  int matrix_T = 0;   // > 0 writes a lagged ARI matrix
  int matrix_draws = 10000;
  std::string matrix_out;
  std::uint64_t seed = 1;
};

inline void cmd_eri(const EriArgs& args, std::ostream& report) {
  const GibbsParams g{args.theta, args.sigma};
  const double closed = eri_closed_form(g, args.eta, args.lag);
  report << "eri_closed_form," << detail::format_double(closed) << '\n';
  if (args.mc_draws > 0) {
    Rng rng(args.seed);
    const int T = args.lag + 1;
    const auto prior = PsmPrior::shared(g, args.eta, T);
    const auto est =
        eri_monte_carlo(args.n, T, prior, 1, T, args.mc_draws, rng);
    report << "eri_monte_carlo," << detail::format_double(est.mean) << '\n';
    report << "eri_monte_carlo_se," << detail::format_double(est.std_error)
           << '\n';
  }
  if (args.matrix_T > 0) {
    if (args.matrix_out.empty())
      throw std::invalid_argument("eri: --matrix-out required with --matrix-T");
    Rng rng(args.seed);
    const auto prior = PsmPrior::shared(g, args.eta, args.matrix_T);
    const auto m =
        lagged_ari_matrix(args.n, args.matrix_T, prior, args.matrix_draws, rng);
    auto os = detail::open_out(args.matrix_out);
    os << "# " << kCsvFormatVersion << " lagged-ari\n";
    os << "# seed=" << args.seed << " theta=" << args.theta
       << " sigma=" << args.sigma << " eta=" << args.eta
       << " draws=" << args.matrix_draws << '\n';
    for (const auto& row : m) {
      for (std::size_t j = 0; j < row.size(); ++j)
        os << (j ? "," : "") << detail::format_double(row[j]);
      os << '\n';
    }
  }
}

// --- twoview ------------------------------------------------------------

struct TwoViewArgs {
  std::vector<std::string> view1;  // paired lists (one pair per stratum)
  std::vector<std::string> view2;
  std::string out_dir;
  bool standardize = false;
  RunConfig base;  // sampler/model settings; data/out fields ignored
};

inline void cmd_twoview(const TwoViewArgs& args, std::ostream& report) {
  if (args.view1.empty() || args.view1.size() != args.view2.size())
    throw std::invalid_argument("twoview: --view1 and --view2 must pair up");
  if (args.out_dir.empty())
    throw std::invalid_argument("twoview: --out-dir is required");
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out(args.out_dir);

  auto read_column = [](const std::string& path) {
    const DataMatrix m = read_data_csv(path);
    if (m.T() != 1)
      throw std::invalid_argument("twoview: " + path +
                                  " must have a single column");
    std::vector<double> v(static_cast<std::size_t>(m.n()));
    for (int i = 0; i < m.n(); ++i) v[static_cast<std::size_t>(i)] = m.at(i, 0);
    return v;
  };
  auto standardize = [](std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    if (sd > 0.0)
      for (double& x : v) x = (x - mean) / sd;
  };

  auto eta_os = detail::open_out(out / "eta_hat.csv");
  eta_os << "# " << kCsvFormatVersion << " twoview\n";
  eta_os << "# seed=" << args.base.seed
         << " config=" << run_config_to_json(args.base).dump() << '\n';
  eta_os << "stratum,n,theta,change_probability,eta_mean\n";
  report << "stratum,n,theta,change_probability,eta_mean\n";

  for (std::size_t s = 0; s < args.view1.size(); ++s) {
    auto y1 = read_column(args.view1[s]);
    auto y2 = read_column(args.view2[s]);
    if (y1.size() != y2.size())
      throw std::invalid_argument("twoview: views in stratum " +
                                  std::to_string(s + 1) +
                                  " have different n");
    if (args.standardize) {
      standardize(y1);
      standardize(y2);
    }
    RunConfig cfg = args.base;
    cfg.seed = mix_seed(args.base.seed, s);
    const GibbsParams prior = cfg.resolve_prior(static_cast<int>(y1.size()));
    SamplerConfig scfg =
        cfg.sampler_config(prior, ObsHyper{cfg.tau2, cfg.mu0, cfg.sigma02});
    const TwoViewResult res = run_two_view(y1, y2, scfg);
    const PosteriorSummary summary =
        summarize(res.output, cfg.zeta, cfg.nonmarginal);

    char row[160];
    std::snprintf(row, sizeof(row), "%zu,%d,%.4f,%.4f,%.4f\n", s + 1,
                  res.output.n, prior.theta, res.change_probability,
                  res.eta_posterior_mean);
    eta_os << row;
    report << row;

    char name[48];
    std::snprintf(name, sizeof(name), "partitions_stratum%02zu.csv", s + 1);
    auto pos = detail::open_out(out / name);
    pos << "# " << kCsvFormatVersion << " twoview-partitions\n";
    pos << "# seed=" << cfg.seed << '\n';
    pos << "view,unit,cluster\n";
    for (int v = 0; v < 2; ++v) {
      const auto& p = summary.point_partitions[static_cast<std::size_t>(v)];
      for (int i = 0; i < p.n(); ++i)
        pos << (v + 1) << ',' << (i + 1) << ',' << p.label(i) << '\n';
    }
  }
}

// --- preprocess ---------------------------------------------------------

struct PreprocessArgs {
  std::string in_path;
  std::string out_path;
  PreprocessConfig cfg;
};

inline void cmd_preprocess(const PreprocessArgs& args) {
  const auto series = read_series_csv(args.in_path);
  const DataMatrix Y = preprocess(series, args.cfg);
  write_data_csv(args.out_path, Y, "preprocessed");
}

}  // namespace dynpart
