#include "mbp/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <stdexcept>

#include "mbp/errors.hpp"

namespace mbp {

LambdaMode parse_lambda_mode(const std::string& name) {
  if (name == "theorem") return LambdaMode::theorem;
  if (name == "simulation") return LambdaMode::simulation;
  throw std::invalid_argument("unknown lambda mode: " + name);
}

std::string to_string(LambdaMode mode) { return mode == LambdaMode::theorem ? "theorem" : "simulation"; }

double lambda_policy(std::size_t n, std::size_t dims, std::size_t lags, const LinkSpec& link, double c2,
                     LambdaMode mode) {
  if (n == 0) throw std::invalid_argument("lambda_policy requires n >= 1");
  const double rate = std::sqrt(std::log(static_cast<double>(dims * dims * lags)) / static_cast<double>(n));
  const double scale = mode == LambdaMode::theorem ? link.lipschitz() / link.eps() : 1.0;
  return c2 * scale * rate;
}

double soft_threshold(double x, double lam) {
  if (x > lam) return x - lam;
  if (x < -lam) return x + lam;
  return 0.0;
}

void FitConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be non-negative");
  if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(step_init > 0.0)) throw std::invalid_argument("step_init must be positive");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("backtrack_factor must lie in (0, 1)");
  }
}

double objective(const LossModel& model, const ParamTensor& theta, double lambda) {
  return model.value(theta) + lambda * norm(theta, NormKind::l111);
}

namespace {

ParamTensor prox_step(const ParamTensor& y, const ParamTensor& grad, double step, double lambda) {
  ParamTensor z = y;
  auto zv = z.values();
  const auto gv = grad.values();
  const double shrink = step * lambda;
  for (std::size_t k = 0; k < zv.size(); ++k) zv[k] = soft_threshold(zv[k] - step * gv[k], shrink);
  return z;
}

double sq_dist(const ParamTensor& a, const ParamTensor& b) {
  const auto x = a.values();
  const auto y = b.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
  return acc;
}

}  // namespace

FitResult fit(const LossModel& model, const FitConfig& config, const std::optional<ParamTensor>& theta_init) {
  config.validate();
  if (model.n() < 1) throw std::invalid_argument("fit requires n >= 1");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  ParamTensor x = theta_init ? *theta_init : ParamTensor::zeros(model.dims(), model.lags());
  if (x.rows() != model.dims() || x.cols() != model.dims() || x.lags() != model.lags()) {
    throw std::invalid_argument("theta_init shape does not match the sample path");
  }
  const double lambda = config.lambda;

  FitResult result;
  double fx = objective(model, x, lambda);
  if (!std::isfinite(fx)) throw NumericalFailure("non-finite objective at the initial point");
  result.objective_trace.push_back(fx);

  ParamTensor y = x;
  bool y_is_x = true;
  double momentum = 1.0;
  double step = config.step_init;

  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    result.iterations = iter;
    if (config.timeout_seconds &&
        std::chrono::duration<double>(clock::now() - start).count() > *config.timeout_seconds) {
      result.timed_out = true;
      break;
    }

    const LossEval at_y = model.value_and_grad(y);
    ParamTensor z;
    double lz = 0.0;
    for (;;) {
      z = prox_step(y, at_y.grad, step, lambda);
      lz = model.value(z);
      const double model_bound =
          at_y.value + inner(at_y.grad, z - y) + sq_dist(z, y) / (2.0 * step);
      if (lz <= model_bound + 1e-12 * std::abs(model_bound)) break;
      step *= config.backtrack_factor;
      if (step < 1e-20) throw NumericalFailure("step size underflow in backtracking");
    }
    const double fz = lz + lambda * norm(z, NormKind::l111);
    if (!std::isfinite(fz)) throw NumericalFailure("non-finite objective");

    if (fz > fx) {
      if (y_is_x) {
        // No descent from the iterate itself: stationary up to rounding.
        result.converged = true;
        break;
      }
      // Extrapolated point overshot; restart momentum from the current iterate.
      y = x;
      y_is_x = true;
      momentum = 1.0;
      continue;
    }

    const double previous = fx;
    ParamTensor x_prev = std::move(x);
    x = std::move(z);
    fx = fz;
    result.objective_trace.push_back(fx);

    if (config.accelerate) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      y = x;
      auto yv = y.values();
      const auto xv = x.values();
      const auto pv = x_prev.values();
      for (std::size_t k = 0; k < yv.size(); ++k) yv[k] = xv[k] + beta * (xv[k] - pv[k]);
      momentum = next;
      y_is_x = beta == 0.0;
    } else {
      y = x;
      y_is_x = true;
    }

    if (std::abs(previous - fx) <= config.tol * std::abs(previous)) {
      result.converged = true;
      break;
    }
  }

  result.theta_hat = std::move(x);
  result.final_step = step;
  return result;
}

FitResult fit(const SamplePath& path, const LinkSpec& link, const FitConfig& config,
              const std::optional<ParamTensor>& theta_init) {
  return fit(LossModel(path, link), config, theta_init);
}

double kkt_residual(const ParamTensor& theta, const ParamTensor& grad, double lambda) {
  if (!theta.same_shape(grad)) throw std::invalid_argument("tensor shape mismatch");
  const auto t = theta.values();
  const auto g = grad.values();
  double worst = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double r = t[k] != 0.0 ? std::abs(g[k] + lambda * (t[k] > 0.0 ? 1.0 : -1.0))
                                 : std::max(std::abs(g[k]) - lambda, 0.0);
    worst = std::max(worst, r);
  }
  return worst;
}

std::vector<IndexTriple> support_estimate(const ParamTensor& theta_hat, const SupportRule& rule) {
  if (const auto* top = std::get_if<TopS>(&rule)) return top_s_indices(theta_hat, top->s);
  const double gamma = std::get<Threshold>(rule).gamma;
  if (!(gamma >= 0.0)) throw std::invalid_argument("support threshold must be non-negative");
  std::vector<IndexTriple> out;
  for (std::size_t i = 0; i < theta_hat.rows(); ++i)
    for (std::size_t j = 0; j < theta_hat.cols(); ++j)
      for (std::size_t l = 0; l < theta_hat.lags(); ++l)
        if (std::abs(theta_hat(i, j, l)) >= gamma) out.push_back({i, j, l});
  return out;
}

std::vector<IndexTriple> support_of(const ParamTensor& t) {
  std::vector<IndexTriple> out;
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j)
      for (std::size_t l = 0; l < t.lags(); ++l)
        if (t(i, j, l) != 0.0) out.push_back({i, j, l});
  return out;
}

ErrorMetrics error_metrics(const ParamTensor& theta_hat, const ParamTensor& theta_star, std::size_t s) {
  if (!theta_hat.same_shape(theta_star)) throw std::invalid_argument("tensor shape mismatch");
  ErrorMetrics m;
  m.frob_error = norm(theta_hat - theta_star, NormKind::frob);
  m.frob_error_sq = m.frob_error * m.frob_error;
  if (s == 0) {
    m.support_fraction = 1.0;
    m.support_undefined = true;
    return m;
  }
  const auto estimated = top_s_indices(theta_hat, s);
  const auto truth = support_of(theta_star);
  std::vector<IndexTriple> common;
  std::set_intersection(estimated.begin(), estimated.end(), truth.begin(), truth.end(), std::back_inserter(common));
  m.support_fraction = static_cast<double>(common.size()) / static_cast<double>(s);
  return m;
}

}  // namespace mbp
