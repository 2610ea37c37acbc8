#include "mbp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mbp/errors.hpp"
#include "mbp/likelihood.hpp"
#include "mbp/process.hpp"
#include "mbp/rng.hpp"

namespace mbp {

namespace {

const std::vector<std::string> kChecks = {"gf-bound", "eta-bound", "kl-decomp", "psd", "decay-table"};

const std::vector<std::string> kKnownKeys = {
    "experiment",        "model.N",          "model.p",        "sweep.s_values",     "sweep.n_values",
    "replicates",        "link.kind",        "link.alpha",     "link.eps",           "lambda.mode",
    "lambda.c2",         "theta.magnitude_low", "theta.magnitude_high", "burn_in",   "master_seed",
    "output_dir",        "threads",          "fit.max_iters",  "fit.tol",            "point_timeout_seconds",
    "diagnose.checks",   "diagnose.theta",   "diagnose.instances", "diagnose.eta_window", "psd.n",
    "psd.segments",      "psd.N",            "decay.family",   "decay.scale",        "decay.rate",
    "decay.N",           "decay.p_values",
};

DecayKind parse_decay_kind(const std::string& name) {
  if (name == "constant") return DecayKind::constant;
  if (name == "polynomial") return DecayKind::polynomial;
  if (name == "exponential") return DecayKind::exponential;
  throw ConfigError("decay.family", "unknown decay family '" + name + "'");
}

/// Runs fn(0..count-1) on a pool of worker threads; rethrows the first error.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SweepPoint {
  std::size_t s = 0;
  std::size_t n = 0;
};

std::vector<RunRecord> run_sweep(const ExperimentConfig& config, const std::vector<SweepPoint>& points) {
  const std::size_t reps = config.replicates;
  std::vector<RunRecord> records(points.size() * reps);
  parallel_for(records.size(), config.threads, [&](std::size_t task) {
    const std::size_t point = task / reps;
    records[task] = run_point(config, point, points[point].s, points[point].n, task % reps);
  });
  return records;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string output_path(const ExperimentConfig& config, const std::string& name) {
  return (std::filesystem::path(config.output_dir) / name).string();
}

void write_timing_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "point,replicate,wall_seconds\n";
  for (const auto& r : records) out << r.point << ',' << r.replicate << ',' << format_double(r.wall_seconds) << '\n';
}

/// Writes records, summary and timing CSVs for a sweep named `name`.
void write_sweep(const ExperimentConfig& config, const std::string& name, ExperimentOutput& output) {
  if (config.output_dir.empty()) return;
  std::filesystem::create_directories(config.output_dir);
  const std::string records_file = output_path(config, name + ".csv");
  const std::string summary_file = output_path(config, name + "_summary.csv");
  const std::string timing_file = output_path(config, name + "_timing.csv");
  {
    auto out = open_output(records_file);
    write_records_csv(out, output.records);
  }
  {
    auto out = open_output(summary_file);
    write_summary_csv(out, output.summary);
  }
  {
    auto out = open_output(timing_file);
    write_timing_csv(out, output.records);
  }
  output.files.insert(output.files.end(), {records_file, summary_file, timing_file});
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = average;
    i = j + 1;
  }
  return r;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::vector<ParamTensor> check_thetas(const DiagnoseSettings& settings, std::size_t count,
                                      const std::function<ParamTensor(std::size_t)>& make) {
  std::vector<ParamTensor> thetas;
  if (settings.theta_file) {
    thetas.push_back(load_tensor(*settings.theta_file));
    return thetas;
  }
  thetas.reserve(count);
  for (std::size_t c = 0; c < count; ++c) thetas.push_back(make(c));
  return thetas;
}

/// g_f drawn uniformly on [0.05, 0.95] so the instance mixes.
double draw_target_gf(std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform(0.05, 0.95);
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "error_vs_n") return ExperimentKind::error_vs_n;
  if (name == "error_vs_sparsity") return ExperimentKind::error_vs_sparsity;
  if (name == "grid") return ExperimentKind::grid;
  if (name == "support_recovery") return ExperimentKind::support_recovery;
  if (name == "diagnose") return ExperimentKind::diagnose;
  throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::error_vs_n:
      return "error_vs_n";
    case ExperimentKind::error_vs_sparsity:
      return "error_vs_sparsity";
    case ExperimentKind::grid:
      return "grid";
    case ExperimentKind::support_recovery:
      return "support_recovery";
    case ExperimentKind::diagnose:
      return "diagnose";
  }
  return "unknown";
}

bool is_known_check(const std::string& name) {
  return std::find(kChecks.begin(), kChecks.end(), name) != kChecks.end();
}

ExperimentConfig ExperimentConfig::from_config(const Config& config) {
  for (const auto& key : config.keys()) {
    if (key.rfind("simulate.", 0) == 0) continue;  // read by the simulate subcommand
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError(key, "unknown key");
    }
  }

  ExperimentConfig c;
  c.experiment = parse_experiment_kind(config.get_string("experiment"));
  c.dims = config.get_size("model.N", 0);
  c.lags = config.get_size("model.p", 0);
  if (config.has("sweep.s_values")) c.s_values = config.get_size_list("sweep.s_values");
  if (config.has("sweep.n_values")) c.n_values = config.get_size_list("sweep.n_values");
  c.replicates = config.get_size("replicates", c.replicates);

  const std::string kind = config.get_string("link.kind", "sigmoid");
  try {
    parse_link_kind(kind);
  } catch (const std::exception& e) {
    throw ConfigError("link.kind", e.what());
  }
  const double alpha = config.get_double("link.alpha", 1.0);
  const double eps = config.get_double("link.eps", 0.05);
  try {
    c.link = LinkSpec::sigmoid(alpha, eps);
  } catch (const std::exception& e) {
    throw ConfigError(eps > 0.0 && eps < 0.5 ? "link.alpha" : "link.eps", e.what());
  }
  try {
    c.lambda_mode = parse_lambda_mode(config.get_string("lambda.mode", "simulation"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("lambda.mode", e.what());
  }
  c.c2 = config.get_double("lambda.c2", c.c2);
  c.magnitude_low = config.get_double("theta.magnitude_low", c.magnitude_low);
  c.magnitude_high = config.get_double("theta.magnitude_high", c.magnitude_high);
  c.burn_in = config.get_size("burn_in", c.burn_in);
  c.master_seed = config.get_u64("master_seed", c.master_seed);
  c.output_dir = config.get_string("output_dir", c.output_dir);
  c.threads = config.get_size("threads", c.threads);
  c.max_iters = config.get_size("fit.max_iters", c.max_iters);
  c.tol = config.get_double("fit.tol", c.tol);
  if (config.has("point_timeout_seconds")) c.point_timeout_seconds = config.get_double("point_timeout_seconds");

  auto& d = c.diagnose;
  if (config.has("diagnose.checks")) d.checks = config.get_string_list("diagnose.checks");
  if (config.has("diagnose.theta")) d.theta_file = config.get_string("diagnose.theta");
  d.instances = config.get_size("diagnose.instances", d.instances);
  d.eta_window = config.get_size("diagnose.eta_window", d.eta_window);
  d.psd_n = config.get_size("psd.n", d.psd_n);
  d.psd_segments = config.get_size("psd.segments", d.psd_segments);
  d.psd_dims = config.get_size("psd.N", d.psd_dims);
  if (config.has("decay.family")) d.decay.kind = parse_decay_kind(config.get_string("decay.family"));
  d.decay.scale = config.get_double("decay.scale", d.decay.scale);
  d.decay.rate = config.get_double("decay.rate", d.decay.rate);
  d.decay_dims = config.get_size("decay.N", d.decay_dims);
  if (config.has("decay.p_values")) d.decay_p_values = config.get_size_list("decay.p_values");

  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates", "must be at least 1");
  if (!(c2 > 0.0)) throw ConfigError("lambda.c2", "must be positive");
  if (!(tol > 0.0)) throw ConfigError("fit.tol", "must be positive");
  if (max_iters < 1) throw ConfigError("fit.max_iters", "must be at least 1");
  if (point_timeout_seconds && !(*point_timeout_seconds > 0.0)) {
    throw ConfigError("point_timeout_seconds", "must be positive");
  }

  if (experiment == ExperimentKind::diagnose) {
    for (const auto& check : diagnose.checks) {
      if (!is_known_check(check)) throw ConfigError("diagnose.checks", "unknown check '" + check + "'");
    }
    if (diagnose.instances < 1) throw ConfigError("diagnose.instances", "must be at least 1");
    if (diagnose.eta_window < 1) throw ConfigError("diagnose.eta_window", "must be at least 1");
    if (diagnose.psd_segments < 1) throw ConfigError("psd.segments", "must be at least 1");
    if (diagnose.psd_n < 4 * diagnose.psd_segments) throw ConfigError("psd.n", "must be at least 4 * psd.segments");
    if (diagnose.psd_dims < 1) throw ConfigError("psd.N", "must be at least 1");
    if (diagnose.decay_dims < 1) throw ConfigError("decay.N", "must be at least 1");
    if (!std::is_sorted(diagnose.decay_p_values.begin(), diagnose.decay_p_values.end()) ||
        std::find(diagnose.decay_p_values.begin(), diagnose.decay_p_values.end(), 0) !=
            diagnose.decay_p_values.end()) {
      throw ConfigError("decay.p_values", "must be positive and ascending");
    }
    return;
  }

  if (dims < 1) throw ConfigError("model.N", "must be at least 1");
  if (lags < 1) throw ConfigError("model.p", "must be at least 1");
  if (n_values.empty()) throw ConfigError("sweep.n_values", "must not be empty");
  if (std::find(n_values.begin(), n_values.end(), 0) != n_values.end()) {
    throw ConfigError("sweep.n_values", "all values must be at least 1");
  }
  if (s_values.empty()) throw ConfigError("sweep.s_values", "must not be empty");
  const std::size_t size = dims * dims * lags;
  for (const std::size_t s : s_values) {
    if (s > size) throw ConfigError("sweep.s_values", "s = " + std::to_string(s) + " exceeds N^2 p");
  }
  if (!(magnitude_low > 0.0)) throw ConfigError("theta.magnitude_low", "must be positive");
  if (!(magnitude_high >= magnitude_low)) throw ConfigError("theta.magnitude_high", "must be >= magnitude_low");
  if (experiment == ExperimentKind::error_vs_n && s_values.size() != 1) {
    throw ConfigError("sweep.s_values", "error_vs_n takes a single s");
  }
  if (experiment == ExperimentKind::error_vs_sparsity && n_values.size() != 1) {
    throw ConfigError("sweep.n_values", "error_vs_sparsity takes a single n");
  }
}

std::uint64_t theta_seed(std::uint64_t master, std::size_t dims, std::size_t lags, std::size_t s,
                         std::size_t replicate) {
  return derive_seed(master, {dims, lags, s, replicate});
}

std::uint64_t data_seed(std::uint64_t master, std::size_t dims, std::size_t lags, std::size_t s, std::size_t n,
                        std::size_t replicate) {
  return derive_seed(master, {dims, lags, s, n, replicate});
}

RunRecord run_point(const ExperimentConfig& config, std::size_t point, std::size_t s, std::size_t n,
                    std::size_t replicate) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  RunRecord rec;
  rec.experiment = to_string(config.experiment);
  rec.point = point;
  rec.replicate = replicate;
  rec.dims = config.dims;
  rec.lags = config.lags;
  rec.s = s;
  rec.n = n;
  rec.theta_seed = theta_seed(config.master_seed, config.dims, config.lags, s, replicate);
  rec.seed = data_seed(config.master_seed, config.dims, config.lags, s, n, replicate);

  const ParamTensor theta_star = random_sparse_theta(config.dims, config.lags, s, config.magnitude_low,
                                                     config.magnitude_high, rec.theta_seed);
  const SamplePath path = simulate(theta_star, config.link, n, config.burn_in, rec.seed);

  FitConfig fit_config;
  fit_config.lambda = lambda_policy(n, config.dims, config.lags, config.link, config.c2, config.lambda_mode);
  fit_config.max_iters = config.max_iters;
  fit_config.tol = config.tol;
  fit_config.timeout_seconds = config.point_timeout_seconds;
  rec.lambda = fit_config.lambda;

  const FitResult result = fit(path, config.link, fit_config);
  const ErrorMetrics metrics = error_metrics(result.theta_hat, theta_star, s);
  rec.frob_error = metrics.frob_error;
  rec.frob_error_sq = metrics.frob_error_sq;
  rec.support_fraction = metrics.support_fraction;
  rec.iterations = result.iterations;
  rec.converged = result.converged;
  rec.timed_out = result.timed_out;
  rec.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return rec;
}

double sample_mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("least_squares_line needs matching samples");
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman_correlation needs >= 2 pairs");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = sample_mean(rx);
  const double my = sample_mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<PointSummary> summarize_records(const std::vector<RunRecord>& records, std::size_t dims,
                                            std::size_t lags) {
  std::vector<PointSummary> out;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const PointSummary& p) { return p.s == r.s && p.n == r.n; });
    if (it == out.end()) {
      PointSummary p;
      p.s = r.s;
      p.n = r.n;
      p.lambda = r.lambda;
      out.push_back(p);
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  const double log_dim = std::log(static_cast<double>(dims * dims * lags));
  for (std::size_t g = 0; g < out.size(); ++g) {
    std::vector<double> frob;
    std::vector<double> frob_sq;
    std::vector<double> support;
    for (const auto* r : groups[g]) {
      frob.push_back(r->frob_error);
      frob_sq.push_back(r->frob_error_sq);
      support.push_back(r->support_fraction);
      out[g].timed_out += r->timed_out ? 1 : 0;
    }
    out[g].count = groups[g].size();
    out[g].mean_frob_error = sample_mean(frob);
    out[g].std_frob_error = sample_std(frob);
    out[g].mean_frob_error_sq = sample_mean(frob_sq);
    out[g].mean_support_fraction = sample_mean(support);
    out[g].std_support_fraction = sample_std(support);
    out[g].n_over_log = log_dim > 0.0 ? static_cast<double>(out[g].n) / log_dim : 0.0;
  }
  return out;
}

ExperimentOutput run_error_vs_n(const ExperimentConfig& config) {
  config.validate();
  if (config.s_values.size() != 1) throw ConfigError("sweep.s_values", "error_vs_n takes a single s");
  std::vector<SweepPoint> points;
  for (const std::size_t n : config.n_values) points.push_back({config.s_values.front(), n});
  ExperimentOutput output;
  output.records = run_sweep(config, points);
  output.summary = summarize_records(output.records, config.dims, config.lags);
  write_sweep(config, "error_vs_n", output);
  return output;
}

ExperimentOutput run_error_vs_sparsity(const ExperimentConfig& config) {
  config.validate();
  if (config.n_values.size() != 1) throw ConfigError("sweep.n_values", "error_vs_sparsity takes a single n");
  std::vector<SweepPoint> points;
  for (const std::size_t s : config.s_values) points.push_back({s, config.n_values.front()});
  ExperimentOutput output;
  output.records = run_sweep(config, points);
  output.summary = summarize_records(output.records, config.dims, config.lags);

  std::vector<double> s_axis;
  std::vector<double> means;
  for (const auto& p : output.summary) {
    s_axis.push_back(static_cast<double>(p.s));
    means.push_back(p.mean_frob_error);
  }
  output.sparsity_fit = least_squares_line(s_axis, means);
  if (means.size() >= 2) output.spearman = spearman_correlation(s_axis, means);

  write_sweep(config, "error_vs_sparsity", output);
  if (!config.output_dir.empty()) {
    const std::string file = output_path(config, "error_vs_sparsity_fit.csv");
    auto out = open_output(file);
    out << "intercept,slope,spearman\n"
        << format_double(output.sparsity_fit->intercept) << ',' << format_double(output.sparsity_fit->slope) << ','
        << (output.spearman ? format_double(*output.spearman) : std::string("nan")) << '\n';
    output.files.push_back(file);
  }
  return output;
}

ExperimentOutput run_grid(const ExperimentConfig& config) {
  config.validate();
  std::vector<SweepPoint> points;
  for (const std::size_t s : config.s_values)
    for (const std::size_t n : config.n_values) points.push_back({s, n});
  ExperimentOutput output;
  output.records = run_sweep(config, points);
  output.summary = summarize_records(output.records, config.dims, config.lags);
  write_sweep(config, "grid", output);
  if (!config.output_dir.empty()) {
    // Pivot: one row per s, one column per n (gnuplot `matrix`-style layout).
    const std::string file = output_path(config, "grid_matrix.csv");
    auto out = open_output(file);
    out << "s";
    for (const std::size_t n : config.n_values) out << ',' << n;
    out << '\n';
    std::size_t k = 0;
    for (const std::size_t s : config.s_values) {
      out << s;
      for (std::size_t j = 0; j < config.n_values.size(); ++j, ++k) {
        out << ',' << format_double(output.summary[k].mean_frob_error);
      }
      out << '\n';
    }
    output.files.push_back(file);
  }
  return output;
}

ExperimentOutput run_support_recovery(const ExperimentConfig& config) {
  config.validate();
  std::vector<SweepPoint> points;
  for (const std::size_t s : config.s_values)
    for (const std::size_t n : config.n_values) points.push_back({s, n});
  ExperimentOutput output;
  output.records = run_sweep(config, points);
  output.summary = summarize_records(output.records, config.dims, config.lags);
  write_sweep(config, "support_recovery", output);
  return output;
}

CsvTable run_check(const std::string& check, const DiagnoseSettings& settings, const LinkSpec& link,
                   std::uint64_t seed) {
  CsvTable table;
  if (check == "gf-bound") {
    table.header = {"case", "N", "p", "tau1_p_step", "g_f", "holds"};
    const auto thetas = check_thetas(settings, settings.instances, [&](std::size_t c) {
      const std::size_t dims = 1 + c % 2;
      const std::size_t lags = 1 + (c / 2) % 2;
      return random_mixing_theta(dims, lags, draw_target_gf(derive_seed(seed, {c, 1})), link,
                                 derive_seed(seed, {c}));
    });
    for (std::size_t c = 0; c < thetas.size(); ++c) {
      const auto r = check_gf_bound(thetas[c], link);
      table.rows.push_back({std::to_string(c), std::to_string(thetas[c].rows()), std::to_string(thetas[c].lags()),
                            format_double(r.tau1_p_step), format_double(r.gf), bool_text(r.holds)});
      ++table.cases;
      table.passed += r.holds ? 1 : 0;
    }
  } else if (check == "eta-bound") {
    table.header = {"case", "N", "p", "n", "tau1_p_step", "max_eta_excess", "h_inf_sq", "f_p", "eta_holds",
                    "h_inf_holds"};
    const auto thetas = check_thetas(settings, settings.instances, [&](std::size_t c) {
      return random_mixing_theta(1, 1 + c % 2, draw_target_gf(derive_seed(seed, {c, 1})), link,
                                 derive_seed(seed, {c}));
    });
    for (std::size_t c = 0; c < thetas.size(); ++c) {
      const auto r = eta_bound_report(thetas[c], link, settings.eta_window);
      double excess = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < r.eta.rows(); ++k)
        for (Eigen::Index l = k; l < r.eta.cols(); ++l) excess = std::max(excess, r.eta(k, l) - r.bound(k, l));
      table.rows.push_back({std::to_string(c), std::to_string(thetas[c].rows()), std::to_string(thetas[c].lags()),
                            std::to_string(settings.eta_window), format_double(r.tau), format_double(excess),
                            format_double(r.h_inf * r.h_inf), format_double(r.f_p), bool_text(r.eta_holds),
                            bool_text(r.h_inf_holds)});
      ++table.cases;
      table.passed += r.eta_holds && r.h_inf_holds ? 1 : 0;
    }
  } else if (check == "kl-decomp") {
    table.header = {"case", "z", "y", "lhs", "rhs", "agree"};
    const auto thetas = check_thetas(settings, settings.instances, [&](std::size_t c) {
      return random_mixing_theta(1, 2, draw_target_gf(derive_seed(seed, {c, 1})), link, derive_seed(seed, {c}));
    });
    for (std::size_t c = 0; c < thetas.size(); ++c) {
      const std::uint64_t states = std::uint64_t{1} << (thetas[c].rows() * thetas[c].lags());
      for (std::uint64_t z = 0; z < states; ++z) {
        for (std::uint64_t y = 0; y < states; ++y) {
          const auto r = kl_decomp_check(thetas[c], link, z, y);
          table.rows.push_back({std::to_string(c), std::to_string(z), std::to_string(y), format_double(r.lhs),
                                format_double(r.rhs), bool_text(r.agree)});
          ++table.cases;
          table.passed += r.agree ? 1 : 0;
        }
      }
    }
  } else if (check == "psd") {
    table.header = {"N", "p", "n", "segments", "c_ell_sq_hat", "autocorr_min_eig", "tolerance", "holds"};
    const ParamTensor theta =
        settings.theta_file ? load_tensor(*settings.theta_file) : ParamTensor::zeros(settings.psd_dims, 1);
    const SamplePath path = simulate(theta, link, settings.psd_n, kDefaultBurnIn, derive_seed(seed, {0}));
    const auto spectral = psd_estimate(path, settings.psd_segments);
    const double toeplitz = autocorr_min_eig(path);
    constexpr double kTolerance = 0.03;
    const bool holds = toeplitz >= spectral.c_ell_sq_hat - kTolerance;
    table.rows.push_back({std::to_string(theta.rows()), std::to_string(theta.lags()), std::to_string(settings.psd_n),
                          std::to_string(settings.psd_segments), format_double(spectral.c_ell_sq_hat),
                          format_double(toeplitz), format_double(kTolerance), bool_text(holds)});
    table.cases = 1;
    table.passed = holds ? 1 : 0;
  } else if (check == "decay-table") {
    table.header = {"p", "inner_norm", "g_f", "G_f", "diverged"};
    for (const auto& r : decay_scaling_report(settings.decay, settings.decay_dims, settings.decay_p_values, link)) {
      table.rows.push_back({std::to_string(r.p), format_double(r.inner_norm), format_double(r.gf),
                            format_double(r.big_gf), bool_text(r.diverged)});
      ++table.cases;
      ++table.passed;
    }
  } else {
    throw ConfigError("diagnose.checks", "unknown check '" + check + "'");
  }
  return table;
}

ExperimentOutput run_diagnose(const ExperimentConfig& config) {
  config.validate();
  ExperimentOutput output;
  std::vector<CsvTable> tables;
  for (std::size_t k = 0; k < config.diagnose.checks.size(); ++k) {
    tables.push_back(run_check(config.diagnose.checks[k], config.diagnose, config.link,
                               derive_seed(config.master_seed, {k})));
  }
  if (config.output_dir.empty()) return output;
  std::filesystem::create_directories(config.output_dir);
  CsvTable summary;
  summary.header = {"check", "cases", "passed", "all_pass"};
  for (std::size_t k = 0; k < tables.size(); ++k) {
    std::string name = config.diagnose.checks[k];
    std::replace(name.begin(), name.end(), '-', '_');
    const std::string file = output_path(config, "diagnose_" + name + ".csv");
    auto out = open_output(file);
    write_csv(out, tables[k]);
    output.files.push_back(file);
    summary.rows.push_back({config.diagnose.checks[k], std::to_string(tables[k].cases),
                            std::to_string(tables[k].passed), bool_text(tables[k].cases == tables[k].passed)});
  }
  const std::string file = output_path(config, "diagnose_summary.csv");
  auto out = open_output(file);
  write_csv(out, summary);
  output.files.push_back(file);
  return output;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::error_vs_n:
      return run_error_vs_n(config);
    case ExperimentKind::error_vs_sparsity:
      return run_error_vs_sparsity(config);
    case ExperimentKind::grid:
      return run_grid(config);
    case ExperimentKind::support_recovery:
      return run_support_recovery(config);
    case ExperimentKind::diagnose:
      return run_diagnose(config);
  }
  throw std::logic_error("unhandled experiment kind");
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "experiment,point,replicate,N,p,s,n,lambda,frob_error,frob_error_sq,support_fraction,iterations,"
         "converged,timed_out,seed,theta_seed\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.point << ',' << r.replicate << ',' << r.dims << ',' << r.lags << ',' << r.s
        << ',' << r.n << ',' << format_double(r.lambda) << ',' << format_double(r.frob_error) << ','
        << format_double(r.frob_error_sq) << ',' << format_double(r.support_fraction) << ',' << r.iterations << ','
        << bool_text(r.converged) << ',' << bool_text(r.timed_out) << ',' << r.seed << ',' << r.theta_seed << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<PointSummary>& summary) {
  out << "s,n,replicates,lambda,mean_frob_error,std_frob_error,mean_frob_error_sq,mean_support_fraction,"
         "std_support_fraction,n_over_log,timed_out\n";
  for (const auto& p : summary) {
    out << p.s << ',' << p.n << ',' << p.count << ',' << format_double(p.lambda) << ','
        << format_double(p.mean_frob_error) << ',' << format_double(p.std_frob_error) << ','
        << format_double(p.mean_frob_error_sq) << ',' << format_double(p.mean_support_fraction) << ','
        << format_double(p.std_support_fraction) << ',' << format_double(p.n_over_log) << ',' << p.timed_out
        << '\n';
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

}  // namespace mbp
