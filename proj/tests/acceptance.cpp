// Acceptance suite. Each criterion prints one line
//   criterion k: PASS|FAIL  <details>
// and the process exits non-zero if any selected criterion fails.
//
//   mbp_acceptance                 run all criteria
//   mbp_acceptance --criterion 7   run one criterion

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mbp/config.hpp"
#include "mbp/estimator.hpp"
#include "mbp/harness.hpp"
#include "mbp/likelihood.hpp"
#include "mbp/markov.hpp"
#include "mbp/rng.hpp"
#include "oracles.hpp"

#ifndef MBP_CONFIG_DIR
#define MBP_CONFIG_DIR "configs"
#endif

namespace {

using mbp::ParamTensor;

const mbp::LinkSpec kLink = mbp::LinkSpec::sigmoid(1.0, 0.05);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) { return mbp::format_double(v); }

std::string join(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + fmt(v[k]);
  return out + "]";
}

mbp::ExperimentConfig figure_config(const std::string& name) {
  auto cfg = mbp::ExperimentConfig::from_config(mbp::Config::load(std::string(MBP_CONFIG_DIR) + "/" + name));
  cfg.output_dir.clear();
  cfg.validate();
  return cfg;
}

// 1. Gradient against central finite differences.
Outcome gradient_check() {
  mbp::Rng rng(101);
  double worst = 0.0;
  const int instances = 25;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t dims = 1 + rng.below(4), lags = 1 + rng.below(3), n = 20 + rng.below(81);
    const auto theta = oracle::random_tensor(dims, lags, 0.3, rng);
    const auto path = oracle::random_path(n, dims, lags, mbp::derive_seed(101, {static_cast<std::uint64_t>(trial)}));
    const auto g = mbp::grad_nll(theta, path, kLink);
    const auto fd = oracle::finite_difference_grad([&](const ParamTensor& t) { return mbp::nll(t, path, kLink); },
                                                   theta);
    const double scale = std::max(mbp::norm(g, mbp::NormKind::frob), 1e-3);
    worst = std::max(worst, mbp::norm(g - fd, mbp::NormKind::frob) / scale);
  }
  return {worst < 1e-6, std::to_string(instances) + " instances, max relative error " + fmt(worst)};
}

// 2. Taylor remainder against the quadratic form.
Outcome quadratic_lower_bound() {
  mbp::Rng rng(202);
  std::size_t violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t dims = 1 + rng.below(4), lags = 1 + rng.below(3), n = 20 + rng.below(41);
    // row l1 norms of theta* and theta* + delta stay <= 2
    auto theta = oracle::random_tensor(dims, lags, 1.0, rng);
    auto delta = oracle::random_tensor(dims, lags, 1.0, rng);
    oracle::cap_row_l1(theta, 1.0);
    oracle::cap_row_l1(delta, 1.0);
    const auto path = mbp::simulate(theta, kLink, n, 50, mbp::derive_seed(202, {static_cast<std::uint64_t>(trial)}));
    const double gap = mbp::taylor_remainder(theta, delta, path, kLink) - mbp::quad_form(delta, path, kLink);
    worst = std::min(worst, gap);
    if (gap < -1e-9) ++violations;
  }
  return {violations == 0, "500 triples, violations " + std::to_string(violations) + ", min gap " + fmt(worst)};
}

// 3. Tensor form against stacked form of the quadratic.
Outcome stacking_equivalence() {
  mbp::Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dims = 1 + rng.below(5), lags = 1 + rng.below(4);
    const auto delta = oracle::random_tensor(dims, lags, 1.0, rng);
    const auto path = oracle::random_path(50, dims, lags, mbp::derive_seed(303, {static_cast<std::uint64_t>(trial)}));
    const double direct = mbp::quad_form(delta, path, kLink);
    const double stacked = oracle::stacked_quad_form(delta, path, kLink);
    worst = std::max(worst, std::abs(direct - stacked) / std::max(stacked, 1e-300));
  }
  return {worst <= 1e-10, "100 instances, max relative difference " + fmt(worst)};
}

// 4. Dobrushin coefficient of the p-step kernel against g_f.
Outcome gf_bound() {
  mbp::DiagnoseSettings settings;
  settings.instances = 100;
  const auto table = mbp::run_check("gf-bound", settings, kLink, 404);
  return {table.cases == 100 && table.passed == table.cases,
          std::to_string(table.passed) + "/" + std::to_string(table.cases) + " instances hold"};
}

// 5. Mixing-coefficient bound and the H norm bound.
Outcome eta_bound() {
  mbp::Rng rng(505);
  std::size_t eta_bad = 0, h_bad = 0;
  double max_ratio = 0.0;
  for (std::uint64_t c = 0; c < 20; ++c) {
    const std::size_t lags = 1 + c % 2;
    const auto theta = mbp::random_mixing_theta(1, lags, rng.uniform(0.05, 0.95), kLink, mbp::derive_seed(505, {c}));
    const auto report = mbp::eta_bound_report(theta, kLink, 6);
    eta_bad += report.eta_holds ? 0 : 1;
    h_bad += report.h_inf_holds ? 0 : 1;
    max_ratio = std::max(max_ratio, report.h_inf * report.h_inf / report.f_p);
  }
  return {eta_bad == 0 && h_bad == 0, "20 instances, eta violations " + std::to_string(eta_bad) +
                                          ", H violations " + std::to_string(h_bad) + ", max ||H||^2/F_p " +
                                          fmt(max_ratio)};
}

// 6. Chain-rule decomposition of the block KL divergence.
Outcome kl_decomposition() {
  mbp::Rng rng(606);
  std::size_t cases = 0, agree = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto theta = oracle::random_tensor(1, 2, 2.0, rng);
    for (std::uint64_t z = 0; z < 4; ++z)
      for (std::uint64_t y = 0; y < 4; ++y) {
        const auto c = mbp::kl_decomp_check(theta, kLink, z, y);
        ++cases;
        agree += c.agree ? 1 : 0;
        worst = std::max(worst, std::abs(c.lhs - c.rhs));
      }
  }
  return {agree == cases, std::to_string(agree) + "/" + std::to_string(cases) + " pairs agree, max |lhs - rhs| " +
                              fmt(worst)};
}

// 7. Bernoulli KL upper bound on a grid.
Outcome kl_bound() {
  std::size_t violations = 0, cases = 0;
  for (int a = 1; a <= 19; ++a)
    for (int b = 1; b <= 19; ++b) {
      const double p = 0.05 * a, q = 0.05 * b;
      ++cases;
      if (mbp::kl_bernoulli(p, q) > mbp::kl_bernoulli_bound(p, q, 0.05)) ++violations;
    }
  return {violations == 0, std::to_string(cases) + " grid points, violations " + std::to_string(violations)};
}

// 8. Gradient sup-norm bound at the truth.
Outcome gradient_bound() {
  const ParamTensor zero = ParamTensor::zeros(5, 2);
  const auto sparse = mbp::random_sparse_theta(5, 2, 10, 0.3, 1.0, 808);
  const auto a = mbp::grad_bound_trial(zero, kLink, 500, 4.0, 200, 801);
  const auto b = mbp::grad_bound_trial(sparse, kLink, 500, 4.0, 200, 802);
  const double limit = a.bound_probability + 3.0 * a.standard_error;
  return {a.within_bound() && b.within_bound(), "rates " + fmt(a.rate) + " (theta* = 0), " + fmt(b.rate) +
                                                    " (sparse theta*), limit " + fmt(limit)};
}

// 9. Concentration of the quadratic form.
Outcome concentration() {
  const auto theta = mbp::random_mixing_theta(2, 1, 0.5, kLink, 909);
  mbp::Rng rng(910);
  auto delta = oracle::random_tensor(2, 1, 1.0, rng);
  const std::size_t n = 2000;
  const double big_gf = mbp::concentration_constant(theta, kLink).value;
  // 2 exp(-n t^2 / G_f) = 1e-3
  const double t = std::sqrt(big_gf * std::log(2000.0) / static_cast<double>(n));
  const auto report = mbp::concentration_trial(theta, kLink, delta, n, t, 300, 911);
  return {report.within_bound(), "g_f " + fmt(mbp::gf(theta, kLink)) + ", t " + fmt(t) + ", rate " +
                                     fmt(report.rate) + ", bound " + fmt(report.bound_probability)};
}

// 10. Spectral density of independent data.
Outcome psd_sanity() {
  const auto path = mbp::simulate(ParamTensor::zeros(1, 1), kLink, 200000, 1000, 1010);
  const auto report = mbp::psd_estimate(path, 2000);
  const double c = report.c_ell_sq_hat;
  return {c >= 0.22 && c <= 0.28, "c_ell_sq_hat " + fmt(c) + " (2000 segments)"};
}

// 11. Error decreases with sample size.
Outcome error_vs_n() {
  const auto cfg = figure_config("fig_a.cfg");
  const auto out = mbp::run_error_vs_n(cfg);
  std::vector<double> means, stds;
  for (const auto& row : out.summary) {
    means.push_back(row.mean_frob_error);
    stds.push_back(row.std_frob_error);
  }
  std::size_t strict = 0, beyond_noise = 0;
  for (std::size_t k = 0; k + 1 < means.size(); ++k) {
    if (means[k + 1] < means[k]) continue;
    ++strict;
    if (means[k + 1] - means[k] > stds[k]) ++beyond_noise;
  }
  return {strict <= 1 && beyond_noise == 0, "mean error " + join(means) + ", std " + join(stds)};
}

// 12. Error grows with sparsity.
Outcome error_vs_sparsity() {
  const auto cfg = figure_config("fig_b.cfg");
  const auto out = mbp::run_error_vs_sparsity(cfg);
  std::vector<double> means;
  for (const auto& row : out.summary) means.push_back(row.mean_frob_error);
  const double rho = out.spearman.value_or(0.0);
  return {rho > 0.9, "mean error " + join(means) + ", spearman " + fmt(rho)};
}

// 13. Support recovery curve.
Outcome support_recovery() {
  auto cfg = figure_config("fig_d.cfg");
  cfg.s_values = {10};
  const auto out = mbp::run_support_recovery(cfg);
  std::vector<double> frac;
  for (const auto& row : out.summary) frac.push_back(row.mean_support_fraction);
  const std::size_t drops = oracle::monotone_violations(frac, false);
  const bool pass = !frac.empty() && frac.back() >= 0.95 && frac.front() <= 0.2 && drops <= 1;
  return {pass, "s = 10, fraction " + join(frac) + ", drops " + std::to_string(drops)};
}

// 14. Inner-norm scaling of decaying tensors.
Outcome decay_scaling() {
  const std::vector<std::size_t> ps{1, 2, 4, 8, 16, 32, 64, 128};
  const auto poly = mbp::decay_scaling_report({mbp::DecayKind::polynomial, 1.0, 2.0}, 1, ps, kLink);
  const double at16 = poly[4].inner_norm, at128 = poly[7].inner_norm;
  const double change = std::abs(at128 - at16) / at16;
  // the slope is read off the large-p part of the grid, where the
  // sqrt(p (p + 1) (2p + 1) / 6) inner norm has reached its p^{3/2} regime
  const auto flat = mbp::decay_scaling_report({mbp::DecayKind::constant, 1.0, 0.0}, 1, {16, 32, 64, 128}, kLink);
  std::vector<double> lx, ly;
  for (const auto& row : flat) {
    lx.push_back(std::log(static_cast<double>(row.p)));
    ly.push_back(std::log(row.inner_norm));
  }
  const double slope = mbp::least_squares_line(lx, ly).slope;
  return {change < 0.1 && std::abs(slope - 1.5) <= 0.1,
          "polynomial change p=16..128 " + fmt(change) + ", constant log-log slope " + fmt(slope)};
}

// 15. Solver contract.
Outcome solver_contract() {
  std::size_t rises = 0;
  double worst_kkt = 0.0;
  bool all_converged = true;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto theta = mbp::random_sparse_theta(6, 3, 12, 0.3, 1.0, mbp::derive_seed(1515, {r, 1}));
    const auto path = mbp::simulate(theta, kLink, 1000, 200, mbp::derive_seed(1515, {r, 2}));
    const mbp::LossModel model(path, kLink);
    mbp::FitConfig cfg;
    cfg.lambda = mbp::lambda_policy(1000, 6, 3, kLink, 0.5, mbp::LambdaMode::simulation);
    cfg.tol = 1e-12;
    cfg.max_iters = 20000;
    cfg.accelerate = r % 2 == 0;
    const auto fit = mbp::fit(model, cfg);
    all_converged = all_converged && fit.converged;
    for (std::size_t k = 0; k + 1 < fit.objective_trace.size(); ++k)
      if (fit.objective_trace[k + 1] > fit.objective_trace[k]) ++rises;
    const auto grad = model.value_and_grad(fit.theta_hat).grad;
    worst_kkt = std::max(worst_kkt, mbp::kkt_residual(fit.theta_hat, grad, cfg.lambda));
  }
  const ParamTensor scalar(1, 1, 1, {0.8});
  const auto path = mbp::simulate(scalar, kLink, 10000, 200, 1516);
  mbp::FitConfig cfg;
  cfg.lambda = 0.0;
  cfg.tol = 1e-14;
  cfg.max_iters = 20000;
  const double newton_gap =
      std::abs(mbp::fit(path, kLink, cfg).theta_hat(0, 0, 0) - oracle::newton_scalar_mle(path, kLink));
  const bool pass = all_converged && rises == 0 && worst_kkt <= 1e-4 && newton_gap <= 1e-4;
  return {pass, "trace rises " + std::to_string(rises) + ", max KKT residual " + fmt(worst_kkt) +
                    ", Newton gap " + fmt(newton_gap)};
}

const std::vector<std::function<Outcome()>> kCriteria{
    gradient_check, quadratic_lower_bound, stacking_equivalence, gf_bound,         eta_bound,
    kl_decomposition, kl_bound,          gradient_bound,       concentration,    psd_sanity,
    error_vs_n,     error_vs_sparsity,   support_recovery,     decay_scaling,    solver_contract,
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> selected;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--criterion" && a + 1 < argc) {
      const long k = std::strtol(argv[++a], nullptr, 10);
      if (k < 1 || k > static_cast<long>(kCriteria.size())) {
        std::cerr << "criterion must be between 1 and " << kCriteria.size() << "\n";
        return 1;
      }
      selected.push_back(static_cast<std::size_t>(k));
    } else {
      std::cerr << "usage: mbp_acceptance [--criterion k]...\n";
      return 1;
    }
  }
  if (selected.empty())
    for (std::size_t k = 1; k <= kCriteria.size(); ++k) selected.push_back(k);

  bool all_pass = true;
  for (const std::size_t k : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = kCriteria[k - 1]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all_pass = all_pass && outcome.pass;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << "criterion " << k << ": " << (outcome.pass ? "PASS" : "FAIL") << "  " << outcome.detail << " ("
         << seconds << " s)";
    std::cout << line.str() << std::endl;
  }
  return all_pass ? 0 : 1;
}
