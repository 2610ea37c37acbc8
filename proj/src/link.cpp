#include "mbp/link.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mbp {

LinkKind parse_link_kind(std::string_view name) {
  if (name == "sigmoid" || name == "logit") return LinkKind::sigmoid;
  throw std::invalid_argument("unknown link kind: " + std::string(name));
}

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

LinkSpec::LinkSpec(LinkKind kind, double alpha, double eps)
    : kind_(kind),
      alpha_(alpha),
      eps_(eps),
      lipschitz_(alpha / 4.0),
      curvature_(alpha * alpha * eps * (1.0 - eps)) {}

LinkSpec LinkSpec::sigmoid(double alpha, double eps) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("link alpha must be positive and finite");
  }
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("link eps must lie in (0, 1/2)");
  }
  return LinkSpec(LinkKind::sigmoid, alpha, eps);
}

double LinkSpec::eval_unclamped(double u) const noexcept {
  const double a = alpha_ * u;
  // Split on sign so exp never overflows.
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double LinkSpec::eval(double u) const noexcept {
  return std::clamp(eval_unclamped(u), eps_, 1.0 - eps_);
}

double LinkSpec::eval_deriv(double u) const noexcept {
  const double f = eval_unclamped(u);
  return alpha_ * f * (1.0 - f);
}

bool LinkSpec::clamp_active(double u) const noexcept {
  const double f = eval_unclamped(u);
  return f < eps_ || f > 1.0 - eps_;
}

double LinkSpec::clamped_deriv(double u) const noexcept {
  return clamp_active(u) ? 0.0 : eval_deriv(u);
}

}  // namespace mbp
