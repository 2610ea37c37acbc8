#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbp/config.hpp"
#include "mbp/estimator.hpp"
#include "mbp/link.hpp"
#include "mbp/markov.hpp"

namespace mbp {

enum class ExperimentKind { error_vs_n, error_vs_sparsity, grid, support_recovery, diagnose };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Settings for the diagnose experiment and the `diagnose` subcommand.
struct DiagnoseSettings {
  std::vector<std::string> checks;     ///< gf-bound, eta-bound, kl-decomp, psd, decay-table
  std::optional<std::string> theta_file;
  std::size_t instances = 100;         ///< random theta per check when no theta file is given
  std::size_t eta_window = 6;          ///< n for eta-bound
  std::size_t psd_n = 200000;
  std::size_t psd_segments = 2000;
  std::size_t psd_dims = 1;            ///< N for the default theta = 0 psd run
  DecayFamily decay{DecayKind::polynomial, 1.0, 2.0};
  std::size_t decay_dims = 1;
  std::vector<std::size_t> decay_p_values{1, 2, 4, 8, 16, 32, 64, 128};
};

bool is_known_check(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::error_vs_n;
  std::size_t dims = 0;  ///< N
  std::size_t lags = 0;  ///< p
  std::vector<std::size_t> s_values;
  std::vector<std::size_t> n_values;
  std::size_t replicates = 20;
  LinkSpec link = LinkSpec::sigmoid();
  LambdaMode lambda_mode = LambdaMode::simulation;
  double c2 = 0.5;
  double magnitude_low = 0.3;
  double magnitude_high = 1.0;
  std::size_t burn_in = kDefaultBurnIn;
  std::uint64_t master_seed = 0;
  std::string output_dir = ".";
  std::size_t threads = 0;  ///< 0 = hardware concurrency
  std::size_t max_iters = 5000;
  double tol = 1e-6;
  std::optional<double> point_timeout_seconds;
  DiagnoseSettings diagnose;

  /// Reads keys: experiment, model.N, model.p, sweep.s_values,
  /// sweep.n_values, replicates, link.{kind,alpha,eps},
  /// lambda.{mode,c2}, theta.{magnitude_low,magnitude_high}, burn_in,
  /// master_seed, output_dir, threads, fit.{max_iters,tol},
  /// point_timeout_seconds and diagnose.* / decay.* / psd.* for diagnostics.
  static ExperimentConfig from_config(const Config& config);

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct RunRecord {
  std::string experiment;
  std::size_t point = 0;
  std::size_t replicate = 0;
  std::size_t dims = 0;
  std::size_t lags = 0;
  std::size_t s = 0;
  std::size_t n = 0;
  double lambda = 0.0;
  double frob_error = 0.0;
  double frob_error_sq = 0.0;
  double support_fraction = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool timed_out = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;        ///< data seed
  std::uint64_t theta_seed = 0;  ///< ground-truth seed
};

struct PointSummary {
  std::size_t s = 0;
  std::size_t n = 0;
  std::size_t count = 0;
  double lambda = 0.0;
  double mean_frob_error = 0.0;
  double std_frob_error = 0.0;
  double mean_frob_error_sq = 0.0;
  double mean_support_fraction = 0.0;
  double std_support_fraction = 0.0;
  double n_over_log = 0.0;  ///< n / log(N^2 p)
  std::size_t timed_out = 0;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};

struct ExperimentOutput {
  std::vector<RunRecord> records;
  std::vector<PointSummary> summary;
  std::optional<LinearFit> sparsity_fit;  ///< error_vs_sparsity only
  std::optional<double> spearman;          ///< error_vs_sparsity only
  std::vector<std::string> files;          ///< written CSV paths
};

/// Seed of the ground truth for (N, p, s, replicate); shared across n.
std::uint64_t theta_seed(std::uint64_t master, std::size_t dims, std::size_t lags, std::size_t s,
                         std::size_t replicate);
/// Seed of the simulated path for (N, p, s, n, replicate).
std::uint64_t data_seed(std::uint64_t master, std::size_t dims, std::size_t lags, std::size_t s, std::size_t n,
                        std::size_t replicate);

/// One replicate at one (s, n) point: draw theta*, simulate, fit, score.
RunRecord run_point(const ExperimentConfig& config, std::size_t point, std::size_t s, std::size_t n,
                    std::size_t replicate);

double sample_mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1 denominator), 0 for fewer than two values.
double sample_std(const std::vector<double>& x);
LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);
/// Spearman rank correlation with average ranks for ties.
double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Per-(s, n) mean/std over records, in first-appearance order.
std::vector<PointSummary> summarize_records(const std::vector<RunRecord>& records, std::size_t dims,
                                            std::size_t lags);

// Each runner writes its CSVs into config.output_dir (created if missing)
// unless output_dir is empty.
ExperimentOutput run_error_vs_n(const ExperimentConfig& config);
ExperimentOutput run_error_vs_sparsity(const ExperimentConfig& config);
ExperimentOutput run_grid(const ExperimentConfig& config);
ExperimentOutput run_support_recovery(const ExperimentConfig& config);
ExperimentOutput run_diagnose(const ExperimentConfig& config);
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Rows of one diagnostic check as a CSV table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t cases = 0;
  std::size_t passed = 0;
};

CsvTable run_check(const std::string& check, const DiagnoseSettings& settings, const LinkSpec& link,
                   std::uint64_t seed);

void write_csv(std::ostream& out, const CsvTable& table);
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<PointSummary>& summary);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace mbp
