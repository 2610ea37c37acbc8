#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mbp/link.hpp"
#include "mbp/process.hpp"
#include "mbp/tensor.hpp"

namespace mbp {

// Block states of the p-lag chain are encoded lag-major, coordinate-minor:
// bit (u * N + i) holds coordinate i of the state u + 1 steps in the past,
// so bits 0..N-1 are the most recent state. A one-step transition maps
// state s to ((s << N) | x) & mask with x the new N-bit state.

inline constexpr std::size_t kMaxKernelBits = 14;   ///< N p for build_kernel
inline constexpr std::size_t kMaxKernelNonzeros = std::size_t{1} << 24;
inline constexpr std::size_t kMaxDenseBits = 10;    ///< N p for dense p-step kernels and KL enumeration
inline constexpr std::size_t kMaxEtaBits = 20;      ///< joint bits enumerated by eta_mixing_exact

/// Exact one-step kernel of the block chain (row-stochastic, sparse).
struct KernelMatrix {
  std::size_t dims = 0;
  std::size_t lags = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> probs;

  std::size_t state_bits() const noexcept { return dims * lags; }
  std::size_t states() const noexcept { return std::size_t{1} << state_bits(); }
};

/// Dense theta with entries uniform on [-1, 1], rescaled so that
/// g_f(theta) == target_gf exactly. Used for exact-enumeration checks.
ParamTensor random_mixing_theta(std::size_t dims, std::size_t lags, double target_gf, const LinkSpec& link,
                                std::uint64_t seed);

/// Conditional probabilities z_i = f(<theta_{i**}, X>) for a block state.
std::vector<double> conditional_probs(const ParamTensor& theta, const LinkSpec& link, std::uint64_t state);

KernelMatrix build_kernel(const ParamTensor& theta, const LinkSpec& link);

/// K^r as a dense matrix, computed by r sparse-dense products.
Eigen::MatrixXd kernel_power(const KernelMatrix& kernel, std::size_t r);

/// max over row pairs of half the l1 distance; input must be row-stochastic.
double dobrushin_tau1(const Eigen::MatrixXd& kernel);

struct GfBoundCheck {
  double tau1_p_step = 0.0;
  double gf = 0.0;
  bool holds = false;
};

/// tau1(K^p) <= g_f(theta) (with 1e-10 slack).
GfBoundCheck check_gf_bound(const ParamTensor& theta, const LinkSpec& link);

/// Exact eta_{kl} for the window X_1..X_n with p - 1 pre-window states
/// included in the conditioning history. 1 <= k <= l <= n.
double eta_mixing_exact(const ParamTensor& theta, const LinkSpec& link, std::size_t n, std::size_t k, std::size_t l);

/// Upper-triangular n x n matrix H with H(k-1, l-1) = eta_{kl}.
Eigen::MatrixXd eta_matrix(const ParamTensor& theta, const LinkSpec& link, std::size_t n);

/// max_k sum_{l >= k} H(k, l).
double h_inf_norm(const Eigen::MatrixXd& h);

struct EtaBoundReport {
  Eigen::MatrixXd eta;
  Eigen::MatrixXd bound;  ///< tau^{1 + floor((l - k - 1) / p)} on the upper triangle
  double tau = 0.0;       ///< tau1(K^p)
  double h_inf = 0.0;
  double f_p = 0.0;       ///< F_p(tau), or +inf when tau >= 1
  bool eta_holds = false;
  bool h_inf_holds = false;
};

EtaBoundReport eta_bound_report(const ParamTensor& theta, const LinkSpec& link, std::size_t n);

/// eta_{kl} <= tau1(K^p)^{1 + floor((l - k - 1)/p)} for all 1 <= k <= l <= n.
bool check_eta_bound(const ParamTensor& theta, const LinkSpec& link, std::size_t n);

/// F_p(tau) = 2 + 2 p^2 / (1/tau - 1)^2 for tau in [0, 1).
double f_p_bound(double tau, std::size_t p);

/// KL(Ber(p) || Ber(q)); p in [0, 1], q in (0, 1).
double kl_bernoulli(double p, double q);

/// 3 (p - q)^2 / (4 eps (1 - eps)); both arguments must lie in [eps, 1 - eps].
double kl_bernoulli_bound(double p, double q, double eps);

struct KlDecompCheck {
  double lhs = 0.0;  ///< KL between the p-block conditional laws
  double rhs = 0.0;  ///< sum of expected one-step conditional KLs
  bool agree = false;
};

/// Exact KL between the laws of the next p states given block histories z
/// and y, against the chain-rule decomposition into one-step KLs.
KlDecompCheck kl_decomp_check(const ParamTensor& theta, const LinkSpec& link, std::uint64_t z, std::uint64_t y);

struct SpectralReport {
  std::vector<double> freq_grid;
  std::vector<double> min_eigs;
  double c_ell_sq_hat = 0.0;
};

inline constexpr std::size_t kDefaultFreqPoints = 256;

/// Bartlett-averaged periodogram of the mean-centred path over n_segments
/// disjoint segments, on freq_points equispaced frequencies in [-pi, pi).
SpectralReport psd_estimate(const SamplePath& path, std::size_t n_segments,
                            std::size_t freq_points = kDefaultFreqPoints);

/// Minimum eigenvalue of the empirical centred block-Toeplitz
/// autocovariance of lag depth p.
double autocorr_min_eig(const SamplePath& path);

enum class DecayKind { constant, polynomial, exponential };

struct DecayFamily {
  DecayKind kind = DecayKind::constant;
  double scale = 1.0;  ///< c
  double rate = 0.0;   ///< alpha (polynomial) or beta (exponential)

  double magnitude(std::size_t lag) const;  ///< lag is 1-based
};

struct DecayRow {
  std::size_t p = 0;
  double inner_norm = 0.0;
  double gf = 0.0;
  double big_gf = 0.0;
  bool diverged = false;
};

/// Theta with |theta_ijl| = family.magnitude(l) for every (i, j), per p.
ParamTensor decay_tensor(const DecayFamily& family, std::size_t dims, std::size_t p);
std::vector<DecayRow> decay_scaling_report(const DecayFamily& family, std::size_t dims,
                                           const std::vector<std::size_t>& p_values, const LinkSpec& link);

}  // namespace mbp
