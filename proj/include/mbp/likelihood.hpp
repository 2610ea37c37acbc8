#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mbp/link.hpp"
#include "mbp/process.hpp"
#include "mbp/tensor.hpp"

namespace mbp {

struct LossEval {
  double value = 0.0;
  ParamTensor grad;
};

/// Normalised Bernoulli negative log-likelihood of a fixed sample path,
/// evaluated through the lagged design matrix. Construct once per path and
/// reuse across solver iterations.
///
/// Probabilities are the clipped link values, and the gradient uses the
/// derivative of the clipped link, so value() and value_and_grad() describe
/// one function.
class LossModel {
 public:
  LossModel(const SamplePath& path, const LinkSpec& link);

  std::size_t n() const noexcept { return n_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t lags() const noexcept { return lags_; }
  const LinkSpec& link() const noexcept { return link_; }
  const Eigen::MatrixXd& design() const noexcept { return design_; }

  double value(const ParamTensor& theta) const;
  LossEval value_and_grad(const ParamTensor& theta) const;

 private:
  void check_shape(const ParamTensor& theta) const;
  Eigen::MatrixXd predictors(const ParamTensor& theta) const;

  std::size_t n_;
  std::size_t dims_;
  std::size_t lags_;
  LinkSpec link_;
  Eigen::MatrixXd design_;   // n x Np
  Eigen::MatrixXd targets_;  // n x N
};

double nll(const ParamTensor& theta, const SamplePath& path, const LinkSpec& link);
ParamTensor grad_nll(const ParamTensor& theta, const SamplePath& path, const LinkSpec& link);

/// E(delta; X) = (c_f / n) sum_t sum_k <delta_{k**}, X^{t-1}>^2, evaluated
/// directly from the path (no design matrix).
double quad_form(const ParamTensor& delta, const SamplePath& path, const LinkSpec& link);

/// L(theta* + delta) - L(theta*) - <grad L(theta*), delta>.
double taylor_remainder(const ParamTensor& theta_star, const ParamTensor& delta, const SamplePath& path,
                        const LinkSpec& link);

/// One row per replicate of a Monte-Carlo inequality check.
struct TrialRow {
  std::size_t replicate = 0;
  double statistic = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct TrialReport {
  std::vector<TrialRow> rows;
  double rate = 0.0;               ///< fraction of violated rows
  double bound_probability = 0.0;  ///< theoretical violation probability
  double standard_error = 0.0;     ///< Bernoulli SE at bound_probability

  /// rate <= bound_probability + 3 standard errors.
  bool within_bound() const noexcept { return rate <= bound_probability + 3.0 * standard_error; }
};

/// (L_f / eps) sqrt(c1 log(N^2 p) / n).
double grad_bound_value(const LinkSpec& link, std::size_t n, std::size_t dims, std::size_t lags, double c1);

/// Fraction of simulated paths whose gradient sup-norm at theta* exceeds
/// grad_bound_value; the target probability is (N^2 p)^{-(c1/2 - 1)}.
TrialReport grad_bound_trial(const ParamTensor& theta_star, const LinkSpec& link, std::size_t n, double c1,
                             std::size_t replicates, std::uint64_t seed, std::size_t burn_in = kDefaultBurnIn);

/// Smallest E(delta)/||delta||_F^2 over random directions drawn from the
/// cone ||delta_{S^c}||_1 <= 3 ||delta_S||_1 + 4 sigma_s(theta*), S the best
/// s-term support of theta*.
double rsc_probe(const ParamTensor& theta_star, const LinkSpec& link, const SamplePath& path, std::size_t s,
                 std::size_t n_directions, std::uint64_t seed);

/// Number of simulated steps used for the long-run estimate of E[E(delta)]
/// so that steps * N is about one million scalar terms.
std::size_t reference_steps(std::size_t dims);

/// Tail rate of |E(delta; X) - E[E(delta; X)]| > t ||delta||_{2,1,1}^2 over
/// independent paths of length n; the target probability is
/// 2 exp(-n t^2 / G_f). Requires g_f(theta*) < 1.
TrialReport concentration_trial(const ParamTensor& theta_star, const LinkSpec& link, const ParamTensor& delta,
                                std::size_t n, double t, std::size_t replicates, std::uint64_t seed,
                                std::size_t burn_in = kDefaultBurnIn);

}  // namespace mbp
