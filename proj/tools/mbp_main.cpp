// Command line front end: simulate, fit, diagnose and experiment.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbp/config.hpp"
#include "mbp/errors.hpp"
#include "mbp/estimator.hpp"
#include "mbp/harness.hpp"
#include "mbp/process.hpp"
#include "mbp/rng.hpp"

namespace {

constexpr int kExitNotConverged = 2;
constexpr int kExitCheckFailed = 3;

mbp::Config load_optional(const std::string& file) { return file.empty() ? mbp::Config{} : mbp::Config::load(file); }

mbp::LinkSpec link_from(const mbp::Config& cfg, std::optional<double> alpha, std::optional<double> eps) {
  mbp::parse_link_kind(cfg.get_string("link.kind", "sigmoid"));
  return mbp::LinkSpec::sigmoid(alpha.value_or(cfg.get_double("link.alpha", 1.0)),
                                eps.value_or(cfg.get_double("link.eps", 0.05)));
}

struct SimulateArgs {
  std::string config;
  std::string theta;
  std::string out;
  std::string theta_out;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> eps;
};

int run_simulate(const SimulateArgs& a) {
  const mbp::Config cfg = load_optional(a.config);
  const mbp::LinkSpec link = link_from(cfg, a.alpha, a.eps);
  const std::uint64_t seed = a.seed.value_or(cfg.get_u64("simulate.seed", cfg.get_u64("master_seed", 0)));
  const std::size_t n = a.n.value_or(cfg.has("simulate.n") ? cfg.get_size("simulate.n") : 0);
  if (n == 0) throw mbp::ConfigError("simulate.n", "missing or zero sample size (use --n)");

  std::string theta_file = a.theta.empty() ? cfg.get_string("simulate.theta", "") : a.theta;
  mbp::ParamTensor theta;
  if (!theta_file.empty()) {
    theta = mbp::load_tensor(theta_file);
  } else {
    const std::size_t dims = cfg.get_size("model.N");
    const std::size_t lags = cfg.get_size("model.p");
    const std::size_t s = cfg.get_size("simulate.s", 0);
    theta = mbp::random_sparse_theta(dims, lags, s, cfg.get_double("theta.magnitude_low", 0.3),
                                     cfg.get_double("theta.magnitude_high", 1.0), mbp::derive_seed(seed, {1}));
  }
  const mbp::SamplePath path = mbp::simulate(theta, link, n, cfg.get_size("burn_in", mbp::kDefaultBurnIn), seed);

  const std::string out = a.out.empty() ? cfg.get_string("simulate.out", "") : a.out;
  if (out.empty()) {
    mbp::write_path(std::cout, path);
  } else {
    mbp::save_path(out, path);
    std::cerr << "wrote " << out << " (n=" << n << ", N=" << path.dims() << ", p=" << path.lags() << ")\n";
  }
  const std::string theta_out = a.theta_out.empty() ? cfg.get_string("simulate.theta_out", "") : a.theta_out;
  if (!theta_out.empty()) mbp::save_tensor(theta_out, theta);
  return 0;
}

struct FitArgs {
  std::string config;
  std::string data;
  std::optional<double> lambda;
  std::string lambda_policy;
  std::optional<double> alpha;
  std::optional<double> eps;
  std::optional<double> tol;
  std::optional<std::size_t> max_iters;
  std::string out;
};

int run_fit(const FitArgs& a) {
  const mbp::Config cfg = load_optional(a.config);
  const mbp::LinkSpec link = link_from(cfg, a.alpha, a.eps);
  const mbp::SamplePath path = mbp::load_path(a.data);

  mbp::FitConfig fc;
  fc.tol = a.tol.value_or(cfg.get_double("fit.tol", 1e-6));
  fc.max_iters = a.max_iters.value_or(cfg.get_size("fit.max_iters", fc.max_iters));
  if (a.lambda) {
    fc.lambda = *a.lambda;
  } else {
    mbp::LambdaMode mode = mbp::parse_lambda_mode(cfg.get_string("lambda.mode", "simulation"));
    double c2 = cfg.get_double("lambda.c2", 0.5);
    if (!a.lambda_policy.empty()) {
      const auto comma = a.lambda_policy.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("--lambda-policy expects <mode>,<c2>");
      mode = mbp::parse_lambda_mode(a.lambda_policy.substr(0, comma));
      c2 = std::stod(a.lambda_policy.substr(comma + 1));
    }
    fc.lambda = mbp::lambda_policy(path.n(), path.dims(), path.lags(), link, c2, mode);
  }

  const mbp::FitResult result = mbp::fit(path, link, fc);
  if (a.out.empty()) {
    mbp::write_tensor(std::cout, result.theta_hat);
  } else {
    mbp::save_tensor(a.out, result.theta_hat);
  }
  std::cerr << "lambda=" << mbp::format_double(fc.lambda) << " iterations=" << result.iterations
            << " objective=" << mbp::format_double(result.objective_trace.back())
            << " converged=" << (result.converged ? "true" : "false") << '\n';
  return result.converged ? 0 : kExitNotConverged;
}

struct DiagnoseArgs {
  std::string config;
  std::string theta;
  std::vector<std::string> checks;
  std::string out;
  std::optional<std::size_t> instances;
  std::optional<std::uint64_t> seed;
};

int run_diagnose_cli(const DiagnoseArgs& a) {
  mbp::Config cfg = load_optional(a.config);
  if (!cfg.has("experiment")) cfg.set("experiment", "diagnose");
  if (!cfg.has("output_dir")) cfg.set("output_dir", "");
  mbp::ExperimentConfig ec = mbp::ExperimentConfig::from_config(cfg);
  if (!a.checks.empty()) ec.diagnose.checks = a.checks;
  if (!a.theta.empty()) ec.diagnose.theta_file = a.theta;
  if (a.instances) ec.diagnose.instances = *a.instances;
  if (a.seed) ec.master_seed = *a.seed;
  ec.experiment = mbp::ExperimentKind::diagnose;
  ec.validate();

  std::vector<mbp::CsvTable> tables;
  for (std::size_t k = 0; k < ec.diagnose.checks.size(); ++k) {
    tables.push_back(mbp::run_check(ec.diagnose.checks[k], ec.diagnose, ec.link, mbp::derive_seed(ec.master_seed, {k})));
  }

  mbp::CsvTable merged;
  if (tables.size() == 1) {
    merged = tables.front();
  } else {
    merged.header = {"check", "cases", "passed", "all_pass"};
    for (std::size_t k = 0; k < tables.size(); ++k) {
      merged.rows.push_back({ec.diagnose.checks[k], std::to_string(tables[k].cases), std::to_string(tables[k].passed),
                             tables[k].cases == tables[k].passed ? "true" : "false"});
    }
  }
  if (a.out.empty()) {
    mbp::write_csv(std::cout, merged);
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    mbp::write_csv(out, merged);
    if (tables.size() > 1) {
      // Per-check detail next to the summary: <stem>_<check>.csv
      const std::filesystem::path base(a.out);
      for (std::size_t k = 0; k < tables.size(); ++k) {
        std::string name = ec.diagnose.checks[k];
        std::replace(name.begin(), name.end(), '-', '_');
        const auto file = base.parent_path() / (base.stem().string() + "_" + name + ".csv");
        std::ofstream detail(file, std::ios::binary);
        mbp::write_csv(detail, tables[k]);
      }
    }
  }

  bool all_pass = true;
  for (const auto& t : tables) {
    if (t.cases != t.passed) {
      all_pass = false;
      std::cerr << "check failed: " << t.cases - t.passed << " of " << t.cases << " cases\n";
    }
  }
  return all_pass ? 0 : kExitCheckFailed;
}

struct ExperimentArgs {
  std::string config;
  std::string output_dir;
  std::optional<std::size_t> threads;
};

int run_experiment_cli(const ExperimentArgs& a) {
  mbp::ExperimentConfig ec = mbp::ExperimentConfig::from_config(mbp::Config::load(a.config));
  if (!a.output_dir.empty()) ec.output_dir = a.output_dir;
  if (a.threads) ec.threads = *a.threads;
  const mbp::ExperimentOutput output = mbp::run_experiment(ec);
  for (const auto& p : output.summary) {
    std::cout << "s=" << p.s << " n=" << p.n << " mean_frob_error=" << mbp::format_double(p.mean_frob_error)
              << " std=" << mbp::format_double(p.std_frob_error)
              << " mean_support_fraction=" << mbp::format_double(p.mean_support_fraction) << '\n';
  }
  if (output.sparsity_fit) {
    std::cout << "linear fit: intercept=" << mbp::format_double(output.sparsity_fit->intercept)
              << " slope=" << mbp::format_double(output.sparsity_fit->slope) << '\n';
  }
  for (const auto& f : output.files) std::cerr << "wrote " << f << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multivariate Bernoulli autoregression: simulate, fit, diagnose, experiment"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a sample path");
  sim_cmd->add_option("--config", sim.config, "Config file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--theta", sim.theta, "Parameter tensor file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--n", sim.n, "Number of recorded steps");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--alpha", sim.alpha, "Sigmoid slope");
  sim_cmd->add_option("--eps", sim.eps, "Probability clip");
  sim_cmd->add_option("--out", sim.out, "Output path file (default: stdout)");
  sim_cmd->add_option("--theta-out", sim.theta_out, "Write the generating tensor here");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the l1-regularised estimator to a path file");
  fit_cmd->add_option("--config", fa.config, "Config file")->check(CLI::ExistingFile);
  fit_cmd->add_option("--data", fa.data, "Sample path file")->required()->check(CLI::ExistingFile);
  auto* lam = fit_cmd->add_option("--lambda", fa.lambda, "Regularisation weight");
  auto* pol = fit_cmd->add_option("--lambda-policy", fa.lambda_policy, "<theorem|simulation>,<c2>");
  lam->excludes(pol);
  fit_cmd->add_option("--alpha", fa.alpha, "Sigmoid slope");
  fit_cmd->add_option("--eps", fa.eps, "Probability clip");
  fit_cmd->add_option("--tol", fa.tol, "Relative objective tolerance");
  fit_cmd->add_option("--max-iters", fa.max_iters, "Iteration limit");
  fit_cmd->add_option("--out", fa.out, "Output tensor file (default: stdout)");

  DiagnoseArgs da;
  auto* diag_cmd = app.add_subcommand("diagnose", "Run exact Markov-chain and spectral checks");
  diag_cmd->add_option("--config", da.config, "Config file")->check(CLI::ExistingFile);
  diag_cmd->add_option("--theta", da.theta, "Parameter tensor file")->check(CLI::ExistingFile);
  diag_cmd->add_option("--check", da.checks, "gf-bound, eta-bound, kl-decomp, psd, decay-table")
      ->delimiter(',')
      ->check(CLI::IsMember({"gf-bound", "eta-bound", "kl-decomp", "psd", "decay-table"}));
  diag_cmd->add_option("--out", da.out, "Output CSV (default: stdout)");
  diag_cmd->add_option("--instances", da.instances, "Random instances per check");
  diag_cmd->add_option("--seed", da.seed, "Master seed");

  ExperimentArgs ea;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a configured simulation study");
  exp_cmd->add_option("--config", ea.config, "Config file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--output-dir", ea.output_dir, "Override output_dir");
  exp_cmd->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_cmd) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fa);
    if (*diag_cmd) return run_diagnose_cli(da);
    if (*exp_cmd) return run_experiment_cli(ea);
  } catch (const mbp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
