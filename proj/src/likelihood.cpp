#include "mbp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbp/rng.hpp"

namespace mbp {

LossModel::LossModel(const SamplePath& path, const LinkSpec& link)
    : n_(path.n()), dims_(path.dims()), lags_(path.lags()), link_(link), design_(design_matrix(path).data) {
  targets_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(dims_));
  for (std::size_t t = 1; t <= n_; ++t)
    for (std::size_t i = 0; i < dims_; ++i)
      targets_(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(i)) = path.x(static_cast<long>(t), i);
}

void LossModel::check_shape(const ParamTensor& theta) const {
  if (theta.rows() != dims_ || theta.cols() != dims_ || theta.lags() != lags_) {
    throw std::invalid_argument("tensor shape does not match the sample path");
  }
}

Eigen::MatrixXd LossModel::predictors(const ParamTensor& theta) const {
  check_shape(theta);
  return design_ * stack(theta).transpose();
}

double LossModel::value(const ParamTensor& theta) const {
  const Eigen::MatrixXd u = predictors(theta);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
      const double z = link_.eval(u(t, i));
      acc += targets_(t, i) > 0.5 ? std::log(z) : std::log1p(-z);
    }
  }
  return -acc / static_cast<double>(n_);
}

LossEval LossModel::value_and_grad(const ParamTensor& theta) const {
  const Eigen::MatrixXd u = predictors(theta);
  Eigen::MatrixXd dloss(u.rows(), u.cols());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    for (Eigen::Index t = 0; t < u.rows(); ++t) {
      const double z = link_.eval(u(t, i));
      const double slope = link_.clamped_deriv(u(t, i));
      if (targets_(t, i) > 0.5) {
        acc += std::log(z);
        dloss(t, i) = -slope / z;
      } else {
        acc += std::log1p(-z);
        dloss(t, i) = slope / (1.0 - z);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n_);
  const Eigen::MatrixXd g = (dloss.transpose() * design_) * inv_n;  // N x Np
  return {-acc * inv_n, unstack(g, lags_)};
}

double nll(const ParamTensor& theta, const SamplePath& path, const LinkSpec& link) {
  return LossModel(path, link).value(theta);
}

ParamTensor grad_nll(const ParamTensor& theta, const SamplePath& path, const LinkSpec& link) {
  return LossModel(path, link).value_and_grad(theta).grad;
}

namespace {

void check_against_path(const ParamTensor& t, const SamplePath& path) {
  if (t.rows() != path.dims() || t.cols() != path.dims() || t.lags() != path.lags()) {
    throw std::invalid_argument("tensor shape does not match the sample path");
  }
}

}  // namespace

double quad_form(const ParamTensor& delta, const SamplePath& path, const LinkSpec& link) {
  check_against_path(delta, path);
  const std::size_t dims = path.dims();
  const std::size_t p = path.lags();
  double acc = 0.0;
  for (std::size_t t = 1; t <= path.n(); ++t) {
    for (std::size_t k = 0; k < dims; ++k) {
      double ip = 0.0;
      for (std::size_t l = 0; l < p; ++l) {
        const long past = static_cast<long>(t) - 1 - static_cast<long>(l);
        for (std::size_t j = 0; j < dims; ++j) {
          if (path.x(past, j)) ip += delta(k, j, l);
        }
      }
      acc += ip * ip;
    }
  }
  return link.curvature() * acc / static_cast<double>(path.n());
}

double taylor_remainder(const ParamTensor& theta_star, const ParamTensor& delta, const SamplePath& path,
                        const LinkSpec& link) {
  if (!theta_star.same_shape(delta)) throw std::invalid_argument("tensor shape mismatch");
  const LossModel model(path, link);
  const LossEval at_star = model.value_and_grad(theta_star);
  return model.value(theta_star + delta) - at_star.value - inner(at_star.grad, delta);
}

namespace {

TrialReport summarize(std::vector<TrialRow> rows, double bound_probability) {
  TrialReport report;
  const double count = static_cast<double>(rows.size());
  std::size_t violations = 0;
  for (const auto& r : rows) violations += r.violated ? 1 : 0;
  report.rows = std::move(rows);
  report.rate = count > 0 ? static_cast<double>(violations) / count : 0.0;
  report.bound_probability = std::clamp(bound_probability, 0.0, 1.0);
  const double q = report.bound_probability;
  report.standard_error = count > 0 ? std::sqrt(q * (1.0 - q) / count) : 0.0;
  return report;
}

}  // namespace

double grad_bound_value(const LinkSpec& link, std::size_t n, std::size_t dims, std::size_t lags, double c1) {
  const double dim = static_cast<double>(dims * dims * lags);
  return link.lipschitz() / link.eps() * std::sqrt(c1 * std::log(dim) / static_cast<double>(n));
}

TrialReport grad_bound_trial(const ParamTensor& theta_star, const LinkSpec& link, std::size_t n, double c1,
                             std::size_t replicates, std::uint64_t seed, std::size_t burn_in) {
  if (!(c1 > 2.0)) throw std::invalid_argument("grad_bound_trial requires c1 > 2");
  if (replicates == 0) throw std::invalid_argument("grad_bound_trial requires replicates >= 1");
  const std::size_t dims = theta_star.rows();
  const std::size_t p = theta_star.lags();
  const double bound = grad_bound_value(link, n, dims, p, c1);
  std::vector<TrialRow> rows;
  rows.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    const SamplePath path = simulate(theta_star, link, n, burn_in, derive_seed(seed, {r}));
    const double stat = norm(grad_nll(theta_star, path, link), NormKind::inf);
    rows.push_back({r, stat, bound, stat > bound});
  }
  const double dim = static_cast<double>(dims * dims * p);
  return summarize(std::move(rows), std::pow(dim, -(c1 / 2.0 - 1.0)));
}

double rsc_probe(const ParamTensor& theta_star, const LinkSpec& link, const SamplePath& path, std::size_t s,
                 std::size_t n_directions, std::uint64_t seed) {
  if (n_directions == 0) throw std::invalid_argument("rsc_probe requires n_directions >= 1");
  check_against_path(theta_star, path);
  const SparsityReport best = sparse_approx(theta_star, s);
  std::vector<bool> on_support(theta_star.size(), false);
  for (const auto& idx : best.support) on_support[theta_star.index(idx.i, idx.j, idx.l)] = true;

  Rng rng(seed);
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < n_directions; ++d) {
    ParamTensor delta(theta_star.rows(), theta_star.cols(), theta_star.lags());
    auto v = delta.values();
    double on_l1 = 0.0;
    double off_l1 = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = rng.normal();
      (on_support[k] ? on_l1 : off_l1) += std::abs(v[k]);
    }
    const double slack = rng.uniform();
    const double budget = 3.0 * on_l1 + 4.0 * best.sigma_s;
    const double scale = off_l1 > 0.0 ? slack * budget / off_l1 : 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!on_support[k]) v[k] *= scale;
    }
    const double fro2 = std::pow(norm(delta, NormKind::frob), 2);
    if (fro2 == 0.0) continue;
    smallest = std::min(smallest, quad_form(delta, path, link) / fro2);
  }
  return std::isfinite(smallest) ? smallest : 0.0;
}

std::size_t reference_steps(std::size_t dims) { return (1'000'000 + dims - 1) / dims; }

TrialReport concentration_trial(const ParamTensor& theta_star, const LinkSpec& link, const ParamTensor& delta,
                                std::size_t n, double t, std::size_t replicates, std::uint64_t seed,
                                std::size_t burn_in) {
  const double g = gf(theta_star, link);
  if (!(g < 1.0)) throw std::invalid_argument("concentration_trial requires g_f(theta*) < 1");
  if (!theta_star.same_shape(delta)) throw std::invalid_argument("tensor shape mismatch");
  if (replicates == 0) throw std::invalid_argument("concentration_trial requires replicates >= 1");

  const std::size_t dims = theta_star.rows();
  const SamplePath reference =
      simulate(theta_star, link, reference_steps(dims), burn_in, derive_seed(seed, {~std::uint64_t{0}}));
  const double mean_e = quad_form(delta, reference, link);
  const double d211 = norm(delta, NormKind::l211);
  const double threshold = t * d211 * d211;

  std::vector<TrialRow> rows;
  rows.reserve(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    const SamplePath path = simulate(theta_star, link, n, burn_in, derive_seed(seed, {r}));
    const double dev = std::abs(quad_form(delta, path, link) - mean_e);
    rows.push_back({r, dev, threshold, dev > threshold});
  }
  const double big_g = concentration_constant(g, theta_star.lags(), link).value;
  return summarize(std::move(rows), 2.0 * std::exp(-static_cast<double>(n) * t * t / big_g));
}

}  // namespace mbp
