#include <cmath>

#include <gtest/gtest.h>

#include "mbp/link.hpp"
#include "mbp/rng.hpp"

using mbp::LinkSpec;

TEST(LinkSpec, ValidatesParameters) {
  EXPECT_THROW(LinkSpec::sigmoid(0.0, 0.05), std::invalid_argument);
  EXPECT_THROW(LinkSpec::sigmoid(-1.0, 0.05), std::invalid_argument);
  EXPECT_THROW(LinkSpec::sigmoid(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(LinkSpec::sigmoid(1.0, 0.5), std::invalid_argument);
}

TEST(LinkSpec, Constants) {
  const auto link = LinkSpec::sigmoid(2.0, 0.1);
  EXPECT_DOUBLE_EQ(link.lipschitz(), 0.5);
  EXPECT_DOUBLE_EQ(link.curvature(), 4.0 * 0.1 * 0.9);
}

TEST(LinkSpec, ParsesKind) {
  EXPECT_EQ(mbp::parse_link_kind("sigmoid"), mbp::LinkKind::sigmoid);
  EXPECT_EQ(mbp::to_string(mbp::LinkKind::sigmoid), "sigmoid");
  EXPECT_THROW(mbp::parse_link_kind("probit"), std::invalid_argument);
}

TEST(Eval, SymmetryPointAndSaturation) {
  for (double alpha : {0.5, 1.0, 3.0}) EXPECT_DOUBLE_EQ(LinkSpec::sigmoid(alpha, 0.05).eval(0.0), 0.5);
  const auto link = LinkSpec::sigmoid(1.0, 0.05);
  EXPECT_DOUBLE_EQ(link.eval(1e6), 0.95);
  EXPECT_DOUBLE_EQ(link.eval(-1e6), 0.05);
  EXPECT_DOUBLE_EQ(link.eval(INFINITY), 0.95);
}

TEST(Eval, ScalarValue) {
  EXPECT_NEAR(LinkSpec::sigmoid(1.0, 0.01).eval(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(LinkSpec::sigmoid(1.0, 0.01).eval(1.0), 0.7311, 1e-4);
}

TEST(Eval, StableForLargeArguments) {
  const auto link = LinkSpec::sigmoid(1.0, 0.05);
  EXPECT_DOUBLE_EQ(link.eval_unclamped(-800.0), 0.0);
  EXPECT_DOUBLE_EQ(link.eval_unclamped(800.0), 1.0);
  EXPECT_TRUE(std::isfinite(link.eval_deriv(-800.0)));
}

TEST(EvalDeriv, PeakAndScalarValue) {
  EXPECT_DOUBLE_EQ(LinkSpec::sigmoid(1.0, 0.05).eval_deriv(0.0), 0.25);
  const double f1 = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(LinkSpec::sigmoid(2.0, 0.05).eval_deriv(0.5), 2.0 * f1 * (1.0 - f1), 1e-15);
  EXPECT_NEAR(LinkSpec::sigmoid(2.0, 0.05).eval_deriv(0.5), 0.3932, 1e-4);
}

TEST(EvalDeriv, BoundedByLipschitzConstant) {
  mbp::Rng rng(1);
  for (double alpha : {0.5, 1.0, 4.0}) {
    const auto link = LinkSpec::sigmoid(alpha, 0.05);
    for (int k = 0; k < 10000; ++k) {
      const double u = rng.uniform(-20.0, 20.0);
      EXPECT_LE(std::abs(link.eval_deriv(u)), link.lipschitz() + 1e-15);
    }
  }
}

TEST(EvalDeriv, MatchesFiniteDifferenceInsideClip) {
  const auto link = LinkSpec::sigmoid(1.5, 0.05);
  for (double u : {-1.5, -0.3, 0.0, 0.7, 1.9}) {
    ASSERT_FALSE(link.clamp_active(u));
    const double h = 1e-6;
    EXPECT_NEAR(link.clamped_deriv(u), (link.eval(u + h) - link.eval(u - h)) / (2 * h), 1e-8);
  }
}

TEST(ClampedDeriv, ZeroWhereClipIsActive) {
  const auto link = LinkSpec::sigmoid(1.0, 0.05);
  const double edge = std::log(0.95 / 0.05);  // f(edge) = 0.95
  EXPECT_TRUE(link.clamp_active(edge + 0.01));
  EXPECT_TRUE(link.clamp_active(-edge - 0.01));
  EXPECT_FALSE(link.clamp_active(edge - 0.01));
  EXPECT_EQ(link.clamped_deriv(edge + 0.5), 0.0);
  EXPECT_GT(link.eval_deriv(edge + 0.5), 0.0);
}

TEST(Curvature, BoundsLogLossSecondDerivativeInsideClip) {
  // d^2/du^2 [-log f] = d^2/du^2 [-log(1 - f)] = alpha^2 f (1 - f) >= c_f when f in [eps, 1 - eps].
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto link = LinkSpec::sigmoid(alpha, 0.05);
    for (double u = -10.0; u <= 10.0; u += 0.01) {
      if (link.clamp_active(u)) continue;
      const double f = link.eval(u);
      EXPECT_GE(alpha * alpha * f * (1.0 - f), link.curvature() - 1e-15);
    }
  }
}
