#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mbp/likelihood.hpp"
#include "mbp/link.hpp"
#include "mbp/process.hpp"
#include "mbp/tensor.hpp"

namespace mbp {

enum class LambdaMode {
  theorem,     ///< c2 (L_f / eps) sqrt(log(N^2 p) / n)
  simulation,  ///< c2 sqrt(log(N^2 p) / n)
};

LambdaMode parse_lambda_mode(const std::string& name);
std::string to_string(LambdaMode mode);

double lambda_policy(std::size_t n, std::size_t dims, std::size_t lags, const LinkSpec& link, double c2,
                     LambdaMode mode);

/// sign(x) max(|x| - lam, 0).
double soft_threshold(double x, double lam);

/// Settings for minimising L(theta) + lambda ||theta||_{1,1,1}.
struct FitConfig {
  double lambda = 0.0;
  std::size_t max_iters = 5000;
  double tol = 1e-8;  ///< relative objective change
  double step_init = 1.0;
  double backtrack_factor = 0.5;
  bool accelerate = true;
  std::optional<double> timeout_seconds;

  void validate() const;
};

struct FitResult {
  ParamTensor theta_hat;
  std::vector<double> objective_trace;  ///< one entry per accepted iterate, starting with the initial point
  std::size_t iterations = 0;
  bool converged = false;
  bool timed_out = false;
  double final_step = 0.0;
};

/// Proximal gradient descent with backtracking. With `accelerate`, Nesterov
/// momentum is used and reset whenever an extrapolated step would raise the
/// objective, so the trace is non-increasing either way.
FitResult fit(const LossModel& model, const FitConfig& config, const std::optional<ParamTensor>& theta_init = {});
FitResult fit(const SamplePath& path, const LinkSpec& link, const FitConfig& config,
              const std::optional<ParamTensor>& theta_init = {});

/// L(theta) + lambda ||theta||_{1,1,1}.
double objective(const LossModel& model, const ParamTensor& theta, double lambda);

/// Sup-norm violation of the first-order optimality conditions: |g + lambda
/// sign(theta)| on the support and max(|g| - lambda, 0) off it.
double kkt_residual(const ParamTensor& theta, const ParamTensor& grad, double lambda);

struct TopS {
  std::size_t s = 0;
};
struct Threshold {
  double gamma = 0.0;
};
using SupportRule = std::variant<TopS, Threshold>;

/// Sorted index set selected by the rule.
std::vector<IndexTriple> support_estimate(const ParamTensor& theta_hat, const SupportRule& rule);

/// Nonzero index set, sorted.
std::vector<IndexTriple> support_of(const ParamTensor& t);

struct ErrorMetrics {
  double frob_error = 0.0;
  double frob_error_sq = 0.0;
  double support_fraction = 1.0;
  bool support_undefined = false;  ///< s == 0; support_fraction reported as 1
};

ErrorMetrics error_metrics(const ParamTensor& theta_hat, const ParamTensor& theta_star, std::size_t s);

}  // namespace mbp
