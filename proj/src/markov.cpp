#include "mbp/markov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "mbp/errors.hpp"
#include "mbp/rng.hpp"

namespace mbp {

namespace {

void require_square(const ParamTensor& theta) {
  if (theta.rows() != theta.cols()) throw std::invalid_argument("theta must be N x N x p");
}

void require_bits(std::size_t bits, std::size_t limit, const char* what) {
  if (bits > limit) {
    throw ResourceLimitError(std::string(what) + ": " + std::to_string(bits) + " state bits exceed the limit of " +
                             std::to_string(limit));
  }
}

std::uint64_t low_mask(std::size_t bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

/// Probability of the next N-bit state x given conditional probabilities z.
double transition_prob(const std::vector<double>& z, std::uint64_t x) {
  double prob = 1.0;
  for (std::size_t i = 0; i < z.size(); ++i) prob *= (x >> i) & 1U ? z[i] : 1.0 - z[i];
  return prob;
}

/// Unchecked Bernoulli KL for probabilities strictly inside (0, 1).
double bernoulli_kl(double p, double q) {
  double acc = 0.0;
  if (p > 0.0) acc += p * std::log(p / q);
  if (p < 1.0) acc += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return acc;
}

}  // namespace

ParamTensor random_mixing_theta(std::size_t dims, std::size_t lags, double target_gf, const LinkSpec& link,
                                std::uint64_t seed) {
  if (!(target_gf >= 0.0)) throw std::invalid_argument("target_gf must be non-negative");
  ParamTensor t(dims, dims, lags);
  Rng rng(seed);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  const double current = gf(t, link);
  if (current > 0.0) t *= target_gf / current;
  return t;
}

std::vector<double> conditional_probs(const ParamTensor& theta, const LinkSpec& link, std::uint64_t state) {
  const std::size_t dims = theta.rows();
  const std::size_t p = theta.lags();
  std::vector<double> z(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    double u = 0.0;
    for (std::size_t l = 0; l < p; ++l)
      for (std::size_t j = 0; j < dims; ++j)
        if ((state >> (l * dims + j)) & 1U) u += theta(i, j, l);
    z[i] = link.eval(u);
  }
  return z;
}

KernelMatrix build_kernel(const ParamTensor& theta, const LinkSpec& link) {
  require_square(theta);
  const std::size_t dims = theta.rows();
  const std::size_t bits = dims * theta.lags();
  require_bits(bits, kMaxKernelBits, "build_kernel");
  const std::size_t states = std::size_t{1} << bits;
  const std::size_t next_states = std::size_t{1} << dims;
  if (states * next_states > kMaxKernelNonzeros) {
    throw ResourceLimitError("build_kernel: kernel would hold more than " + std::to_string(kMaxKernelNonzeros) +
                             " nonzeros");
  }
  const std::uint64_t mask = low_mask(bits);

  KernelMatrix kernel;
  kernel.dims = dims;
  kernel.lags = theta.lags();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(states * next_states);
  for (std::uint64_t s = 0; s < states; ++s) {
    const auto z = conditional_probs(theta, link, s);
    for (std::uint64_t x = 0; x < next_states; ++x) {
      const std::uint64_t to = ((s << dims) | x) & mask;
      entries.emplace_back(static_cast<int>(s), static_cast<int>(to), transition_prob(z, x));
    }
  }
  kernel.probs.resize(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  kernel.probs.setFromTriplets(entries.begin(), entries.end());
  return kernel;
}

Eigen::MatrixXd kernel_power(const KernelMatrix& kernel, std::size_t r) {
  if (r == 0) throw std::invalid_argument("kernel_power requires r >= 1");
  require_bits(kernel.state_bits(), kMaxDenseBits, "kernel_power");
  Eigen::MatrixXd power = Eigen::MatrixXd(kernel.probs);
  for (std::size_t step = 1; step < r; ++step) power = kernel.probs * power;
  return power;
}

double dobrushin_tau1(const Eigen::MatrixXd& kernel) {
  if (kernel.rows() == 0 || kernel.rows() != kernel.cols()) {
    throw std::invalid_argument("dobrushin_tau1 requires a non-empty square matrix");
  }
  for (Eigen::Index r = 0; r < kernel.rows(); ++r) {
    if ((kernel.row(r).array() < 0.0).any() || !kernel.row(r).allFinite() ||
        std::abs(kernel.row(r).sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("dobrushin_tau1 requires a row-stochastic matrix");
    }
  }
  double worst = 0.0;
  for (Eigen::Index a = 0; a < kernel.rows(); ++a)
    for (Eigen::Index b = a + 1; b < kernel.rows(); ++b)
      worst = std::max(worst, 0.5 * (kernel.row(a) - kernel.row(b)).lpNorm<1>());
  return std::min(worst, 1.0);
}

GfBoundCheck check_gf_bound(const ParamTensor& theta, const LinkSpec& link) {
  const KernelMatrix kernel = build_kernel(theta, link);
  GfBoundCheck check;
  check.tau1_p_step = dobrushin_tau1(kernel_power(kernel, theta.lags()));
  check.gf = gf(theta, link);
  check.holds = check.tau1_p_step <= check.gf + 1e-10;
  return check;
}

double eta_mixing_exact(const ParamTensor& theta, const LinkSpec& link, std::size_t n, std::size_t k, std::size_t l) {
  require_square(theta);
  if (!(1 <= k && k <= l && l <= n)) throw std::invalid_argument("eta_mixing_exact requires 1 <= k <= l <= n");
  const std::size_t dims = theta.rows();
  const std::size_t p = theta.lags();
  require_bits(dims * (n - k), kMaxEtaBits, "eta_mixing_exact");
  require_bits(dims * p, kMaxKernelBits, "eta_mixing_exact");

  const std::uint64_t mask = low_mask(dims * p);
  const std::uint64_t next_states = std::uint64_t{1} << dims;
  const std::size_t history_states = std::size_t{1} << (dims * (p - 1));
  const std::size_t outcomes = std::size_t{1} << (dims * (n - l + 1));

  // Law of (X_l, ..., X_n) given the p-block ending at time k. Outcome index
  // holds X_t at bits N (t - l).
  auto law = [&](std::uint64_t block, std::uint64_t w) {
    std::vector<double> out(outcomes, 0.0);
    const std::uint64_t start_index = l == k ? w : 0;
    auto walk = [&](auto&& self, std::size_t t, std::uint64_t state, double prob, std::uint64_t index) -> void {
      if (t > n) {
        out[index] += prob;
        return;
      }
      const auto z = conditional_probs(theta, link, state);
      for (std::uint64_t x = 0; x < next_states; ++x) {
        const std::uint64_t next_index = t >= l ? index | (x << (dims * (t - l))) : index;
        self(self, t + 1, ((state << dims) | x) & mask, prob * transition_prob(z, x), next_index);
      }
    };
    walk(walk, k + 1, block, 1.0, start_index);
    return out;
  };

  double worst = 0.0;
  std::vector<std::vector<double>> laws(next_states);
  for (std::uint64_t h = 0; h < history_states; ++h) {
    for (std::uint64_t w = 0; w < next_states; ++w) laws[w] = law(((h << dims) | w) & mask, w);
    for (std::uint64_t a = 0; a < next_states; ++a) {
      for (std::uint64_t b = a + 1; b < next_states; ++b) {
        double l1 = 0.0;
        for (std::size_t o = 0; o < outcomes; ++o) l1 += std::abs(laws[a][o] - laws[b][o]);
        worst = std::max(worst, 0.5 * l1);
      }
    }
  }
  return std::min(worst, 1.0);
}

Eigen::MatrixXd eta_matrix(const ParamTensor& theta, const LinkSpec& link, std::size_t n) {
  if (n == 0) throw std::invalid_argument("eta_matrix requires n >= 1");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t l = k; l <= n; ++l)
      h(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(l - 1)) = eta_mixing_exact(theta, link, n, k, l);
  return h;
}

double h_inf_norm(const Eigen::MatrixXd& h) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < h.rows(); ++k) worst = std::max(worst, h.row(k).tail(h.cols() - k).sum());
  return worst;
}

double f_p_bound(double tau, std::size_t p) {
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("f_p_bound requires tau in [0, 1)");
  if (tau == 0.0) return 2.0;
  const double d = 1.0 / tau - 1.0;
  const double pp = static_cast<double>(p);
  return 2.0 + 2.0 * pp * pp / (d * d);
}

EtaBoundReport eta_bound_report(const ParamTensor& theta, const LinkSpec& link, std::size_t n) {
  EtaBoundReport report;
  report.eta = eta_matrix(theta, link, n);
  report.tau = dobrushin_tau1(kernel_power(build_kernel(theta, link), theta.lags()));
  const long p = static_cast<long>(theta.lags());
  const auto size = static_cast<Eigen::Index>(n);
  report.bound = Eigen::MatrixXd::Zero(size, size);
  report.eta_holds = true;
  for (Eigen::Index k = 0; k < size; ++k) {
    for (Eigen::Index l = k; l < size; ++l) {
      const long gap = static_cast<long>(l - k) - 1;
      const long quotient = gap >= 0 ? gap / p : -1;  // floor division
      const double bound = std::pow(report.tau, static_cast<double>(1 + quotient));
      report.bound(k, l) = bound;
      if (report.eta(k, l) > bound + 1e-10) report.eta_holds = false;
    }
  }
  report.h_inf = h_inf_norm(report.eta);
  report.f_p = report.tau < 1.0 ? f_p_bound(report.tau, theta.lags()) : std::numeric_limits<double>::infinity();
  report.h_inf_holds = report.h_inf * report.h_inf <= report.f_p + 1e-10;
  return report;
}

bool check_eta_bound(const ParamTensor& theta, const LinkSpec& link, std::size_t n) {
  return eta_bound_report(theta, link, n).eta_holds;
}

double kl_bernoulli(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0) || !(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("kl_bernoulli requires p in [0, 1] and q in (0, 1)");
  }
  return bernoulli_kl(p, q);
}

double kl_bernoulli_bound(double p, double q, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 0.5)");
  // small slack so grid points such as 19 * 0.05 count as 1 - eps
  const auto inside = [eps](double v) { return v >= eps - 1e-12 && v <= 1.0 - eps + 1e-12; };
  if (!inside(p) || !inside(q)) throw std::invalid_argument("kl_bernoulli_bound arguments must lie in [eps, 1 - eps]");
  return 3.0 * (p - q) * (p - q) / (4.0 * eps * (1.0 - eps));
}

KlDecompCheck kl_decomp_check(const ParamTensor& theta, const LinkSpec& link, std::uint64_t z, std::uint64_t y) {
  require_square(theta);
  const std::size_t dims = theta.rows();
  const std::size_t p = theta.lags();
  const std::size_t bits = dims * p;
  require_bits(bits, kMaxDenseBits, "kl_decomp_check");
  const std::uint64_t mask = low_mask(bits);
  if (z > mask || y > mask) throw std::invalid_argument("kl_decomp_check state out of range");

  // Direct route: rows z and y of the p-step kernel.
  const Eigen::MatrixXd kp = kernel_power(build_kernel(theta, link), p);
  KlDecompCheck check;
  for (Eigen::Index a = 0; a < kp.cols(); ++a) {
    const double pz = kp(static_cast<Eigen::Index>(z), a);
    if (pz > 0.0) check.lhs += pz * std::log(pz / kp(static_cast<Eigen::Index>(y), a));
  }

  // Chain rule: sum_t E_z[d_K] over the shared prefix X_1..X_{t-1}.
  const std::uint64_t next_states = std::uint64_t{1} << dims;
  auto walk = [&](auto&& self, std::size_t t, std::uint64_t sz, std::uint64_t sy, double prob) -> void {
    const auto qz = conditional_probs(theta, link, sz);
    const auto qy = conditional_probs(theta, link, sy);
    double d_k = 0.0;
    for (std::size_t i = 0; i < dims; ++i) d_k += bernoulli_kl(qz[i], qy[i]);
    check.rhs += prob * d_k;
    if (t == p) return;
    for (std::uint64_t x = 0; x < next_states; ++x) {
      self(self, t + 1, ((sz << dims) | x) & mask, ((sy << dims) | x) & mask, prob * transition_prob(qz, x));
    }
  };
  walk(walk, 1, z, y, 1.0);

  check.agree = std::abs(check.lhs - check.rhs) <= 1e-10;
  return check;
}

SpectralReport psd_estimate(const SamplePath& path, std::size_t n_segments, std::size_t freq_points) {
  if (n_segments == 0 || freq_points == 0) {
    throw std::invalid_argument("psd_estimate requires n_segments >= 1 and freq_points >= 1");
  }
  const std::size_t n = path.n();
  if (n < 4 * n_segments) throw std::invalid_argument("psd_estimate requires n >= 4 * n_segments");
  const std::size_t dims = path.dims();
  const std::size_t seg_len = n / n_segments;
  const auto nd = static_cast<Eigen::Index>(dims);

  Eigen::MatrixXd centred(static_cast<Eigen::Index>(n), nd);
  for (std::size_t t = 1; t <= n; ++t)
    for (std::size_t i = 0; i < dims; ++i)
      centred(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(i)) = path.x(static_cast<long>(t), i);
  centred.rowwise() -= centred.colwise().mean();

  SpectralReport report;
  report.freq_grid.resize(freq_points);
  report.min_eigs.resize(freq_points);
  const double scale = 1.0 / static_cast<double>(n_segments * seg_len);
  Eigen::VectorXcd dft(nd);
  Eigen::MatrixXcd estimate(nd, nd);
  for (std::size_t m = 0; m < freq_points; ++m) {
    const double omega =
        -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(freq_points);
    report.freq_grid[m] = omega;
    const std::complex<double> rotate = std::polar(1.0, -omega);
    estimate.setZero();
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
      dft.setZero();
      std::complex<double> phase(1.0, 0.0);
      const std::size_t begin = seg * seg_len;
      for (std::size_t t = 0; t < seg_len; ++t) {
        dft += phase * centred.row(static_cast<Eigen::Index>(begin + t)).transpose().cast<std::complex<double>>();
        phase *= rotate;
      }
      estimate.noalias() += dft * dft.adjoint();
    }
    estimate *= scale;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(estimate, Eigen::EigenvaluesOnly);
    report.min_eigs[m] = std::max(solver.eigenvalues().minCoeff(), 0.0);
  }
  report.c_ell_sq_hat = *std::min_element(report.min_eigs.begin(), report.min_eigs.end());
  return report;
}

double autocorr_min_eig(const SamplePath& path) {
  const std::size_t n = path.n();
  const std::size_t dims = path.dims();
  const std::size_t p = path.lags();
  if (n == 0) throw std::invalid_argument("autocorr_min_eig requires a non-empty path");
  const auto nd = static_cast<Eigen::Index>(dims);

  Eigen::MatrixXd centred(static_cast<Eigen::Index>(n), nd);
  for (std::size_t t = 1; t <= n; ++t)
    for (std::size_t i = 0; i < dims; ++i)
      centred(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(i)) = path.x(static_cast<long>(t), i);
  centred.rowwise() -= centred.colwise().mean();

  const auto size = static_cast<Eigen::Index>(dims * p);
  Eigen::MatrixXd toeplitz(size, size);
  for (std::size_t h = 0; h < p; ++h) {
    // gamma(h) = (1/n) sum_t xc_t xc_{t+h}^T
    const auto rows = static_cast<Eigen::Index>(n > h ? n - h : 0);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(nd, nd);
    if (rows > 0) {
      gamma = centred.topRows(rows).transpose() * centred.middleRows(static_cast<Eigen::Index>(h), rows);
    }
    gamma /= static_cast<double>(n);
    for (std::size_t a = 0; a + h < p; ++a) {
      const auto r0 = static_cast<Eigen::Index>(a * dims);
      const auto c0 = static_cast<Eigen::Index>((a + h) * dims);
      toeplitz.block(r0, c0, nd, nd) = gamma;
      toeplitz.block(c0, r0, nd, nd) = gamma.transpose();
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(toeplitz, Eigen::EigenvaluesOnly);
  return std::max(solver.eigenvalues().minCoeff(), 0.0);
}

double DecayFamily::magnitude(std::size_t lag) const {
  if (lag == 0) throw std::invalid_argument("decay lags are 1-based");
  const double k = static_cast<double>(lag);
  switch (kind) {
    case DecayKind::constant:
      return scale;
    case DecayKind::polynomial:
      return scale * std::pow(k, -rate);
    case DecayKind::exponential:
      return scale * std::exp(-rate * k);
  }
  return scale;
}

ParamTensor decay_tensor(const DecayFamily& family, std::size_t dims, std::size_t p) {
  ParamTensor t(dims, dims, p);
  for (std::size_t i = 0; i < dims; ++i)
    for (std::size_t j = 0; j < dims; ++j)
      for (std::size_t l = 0; l < p; ++l) t(i, j, l) = family.magnitude(l + 1);
  return t;
}

std::vector<DecayRow> decay_scaling_report(const DecayFamily& family, std::size_t dims,
                                           const std::vector<std::size_t>& p_values, const LinkSpec& link) {
  if (!std::is_sorted(p_values.begin(), p_values.end())) throw std::invalid_argument("p_values must be ascending");
  std::vector<DecayRow> rows;
  rows.reserve(p_values.size());
  for (const std::size_t p : p_values) {
    const ParamTensor t = decay_tensor(family, dims, p);
    DecayRow row;
    row.p = p;
    row.inner_norm = gf_inner(t);
    row.gf = gf(t, link);
    const auto big = concentration_constant(row.gf, p, link);
    row.big_gf = big.value;
    row.diverged = big.diverged;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mbp
