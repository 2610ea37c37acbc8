#pragma once

#include <string>
#include <string_view>

namespace mbp {

enum class LinkKind { sigmoid };

LinkKind parse_link_kind(std::string_view name);
std::string to_string(LinkKind kind);

/// Inverse link f: R -> [eps, 1 - eps] together with its analytic constants.
///
/// For the sigmoid family f(u) = clip(1 / (1 + exp(-alpha u)), eps, 1 - eps):
///   Lipschitz constant  L_f = alpha / 4
///   curvature bound     c_f = alpha^2 eps (1 - eps)
/// c_f bounds the second derivative of -log f and -log(1 - f) from below on
/// the region where the clip is inactive.
class LinkSpec {
 public:
  static LinkSpec sigmoid(double alpha = 1.0, double eps = 0.05);

  LinkKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double eps() const noexcept { return eps_; }
  double lipschitz() const noexcept { return lipschitz_; }
  double curvature() const noexcept { return curvature_; }

  /// Clipped probability in [eps, 1 - eps].
  double eval(double u) const noexcept;

  /// Smooth sigmoid value without clipping.
  double eval_unclamped(double u) const noexcept;

  /// alpha f(u) (1 - f(u)) of the smooth sigmoid; the clip is not applied.
  double eval_deriv(double u) const noexcept;

  /// True when the clip is active at u, i.e. eval(u) is a constant in a
  /// neighbourhood of u.
  bool clamp_active(double u) const noexcept;

  /// Derivative of the clipped link: eval_deriv(u) inside the clip region,
  /// zero where the clip is active.
  double clamped_deriv(double u) const noexcept;

 private:
  LinkSpec(LinkKind kind, double alpha, double eps);

  LinkKind kind_;
  double alpha_;
  double eps_;
  double lipschitz_;
  double curvature_;
};

}  // namespace mbp
