#include <gtest/gtest.h>

#include <cmath>

#include "fairadj/loss.h"
#include "test_util.h"

using namespace fairadj;
using testkit::numeric_diagonal;
using testkit::numeric_gradient;
using testkit::relative_error;

TEST(Sigmoid, Basics) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(-3.7), 1.0 - sigmoid(3.7), 1e-15);
  const double s40 = sigmoid(40.0);
  EXPECT_TRUE(std::isfinite(s40));
  EXPECT_LT(s40, 1.0);
  EXPECT_LT(1.0 - s40, 1e-12);
}

TEST(Sigmoid, StrictlyInsideUnitIntervalUpTo500) {
  for (double u = -500.0; u <= 500.0; u += 0.5) {
    const double s = sigmoid(u);
    EXPECT_GT(s, 0.0) << u;
    EXPECT_LT(s, 1.0) << u;
  }
}

TEST(Sigmoid, MatchesLongDoubleReference) {
  for (double u : {-30.0, -5.0, -0.3, 0.0, 1e-8, 2.5, 17.0}) {
    const long double ref = 1.0L / (1.0L + std::exp(-static_cast<long double>(u)));
    EXPECT_NEAR(sigmoid(u), static_cast<double>(ref), 1e-16 + 1e-15 * static_cast<double>(ref));
  }
}

TEST(Logit, InvertsSigmoidAndClamps) {
  for (double u : {-8.0, -1.0, 0.0, 0.5, 6.0}) EXPECT_NEAR(logit(sigmoid(u)), u, 1e-9);
  EXPECT_TRUE(std::isfinite(logit(0.0)));
  EXPECT_TRUE(std::isfinite(logit(1.0)));
  EXPECT_NEAR(logit(0.0), std::log(1e-12), 1e-6);
}

TEST(Mse, Examples) {
  const Vector y = (Vector(2) << 1, 1).finished();
  const LossEval same = mse(y, y);
  EXPECT_EQ(same.value, 0.0);
  EXPECT_EQ(same.grad, Vector::Zero(2));
  const LossEval e = mse(Vector::Zero(2), y);
  EXPECT_EQ(e.value, 2.0);
  EXPECT_EQ(e.grad, (Vector(2) << -2, -2).finished());
  EXPECT_EQ(e.hess, Vector::Constant(2, 2.0));
}

TEST(Mse, LengthMismatch) {
  EXPECT_THROW(mse(Vector::Zero(2), Vector::Zero(3)), Error);
}

TEST(Bce, Examples) {
  const LossEval e = bce(Vector::Zero(1), Vector::Constant(1, 0.5));
  EXPECT_NEAR(e.value, std::log(2.0), 1e-15);
  EXPECT_NEAR(e.grad[0], 0.0, 1e-15);
  EXPECT_NEAR(e.hess[0], 0.25, 1e-15);
}

TEST(Bce, PseudoLabelFixedPoint) {
  Rng rng(5);
  const Vector u = testkit::random_normal(rng, 40, 3.0);
  const LossEval e = bce(u, sigmoid(u));
  EXPECT_LT(e.grad.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Bce, MatchesNaiveFormulaAwayFromSaturation) {
  Rng rng(6);
  const Vector u = testkit::random_normal(rng, 30, 2.0);
  const Vector y = testkit::random_uniform(rng, 30);
  long double naive = 0.0L;
  for (Index i = 0; i < u.size(); ++i) {
    const long double s = 1.0L / (1.0L + std::exp(-static_cast<long double>(u[i])));
    naive -= y[i] * std::log(s) + (1.0L - y[i]) * std::log(1.0L - s);
  }
  EXPECT_NEAR(bce(u, y).value, static_cast<double>(naive), 1e-12 * static_cast<double>(naive));
}

TEST(Bce, FiniteUnderSaturation) {
  const Vector u = (Vector(4) << -500, -40, 40, 500).finished();
  const Vector y = (Vector(4) << 1, 0, 0, 1).finished();
  const LossEval e = bce(u, y);
  EXPECT_TRUE(std::isfinite(e.value));
  EXPECT_NEAR(e.value, 500.0 + 40.0, 1e-9);
  EXPECT_TRUE(e.grad.allFinite());
  EXPECT_TRUE((e.hess.array() > 0.0).all());
}

TEST(Bce, Errors) {
  EXPECT_THROW(bce(Vector::Zero(2), Vector::Zero(3)), Error);
  EXPECT_THROW(bce(Vector::Zero(1), Vector::Constant(1, 1.5)), Error);
  EXPECT_THROW(bce(Vector::Zero(1), Vector::Constant(1, -0.1)), Error);
}

TEST(Bce, HessianPositiveAndBounded) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = testkit::random_normal(rng, 50, 10.0);
    const LossEval e = bce(u, testkit::random_bits(rng, 50));
    EXPECT_TRUE((e.hess.array() > 0.0).all());
    EXPECT_TRUE((e.hess.array() <= 0.25).all());
  }
}

TEST(LossGradients, MseFiniteDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector u = testkit::random_normal(rng, 50);
    const Vector y = testkit::random_normal(rng, 50);
    const LossEval e = mse(u, y);
    EXPECT_LT(relative_error(e.grad, numeric_gradient([&](const Vector& v) { return mse(v, y).value; }, u)), 1e-6);
    EXPECT_LT(relative_error(e.hess, numeric_diagonal([&](const Vector& v) { return mse(v, y).grad; }, u)), 1e-5);
  }
}

TEST(LossGradients, BceFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector u = testkit::random_normal(rng, 50, 2.0);
    const Vector y = trial % 2 == 0 ? testkit::random_bits(rng, 50) : testkit::random_uniform(rng, 50);
    const LossEval e = bce(u, y);
    EXPECT_LT(relative_error(e.grad, numeric_gradient([&](const Vector& v) { return bce(v, y).value; }, u)), 1e-6);
    EXPECT_LT(relative_error(e.hess, numeric_diagonal([&](const Vector& v) { return bce(v, y).grad; }, u)), 1e-5);
  }
}

TEST(BceIdentity, ZeroScoresGiveExactZero) {
  Rng rng(3);
  const Vector zero = Vector::Zero(20);
  EXPECT_EQ(bce_identity_gap(zero, sigmoid(zero), testkit::random_bits(rng, 20), zero), 0.0);
}

TEST(BceIdentity, ScalarHandEvaluation) {
  // n=1, u=2, f=1, y=1. Direct evaluation of both sides in long double.
  const long double u = 2.0L, f = 1.0L, y = 1.0L;
  const long double soft = 1.0L / (1.0L + std::exp(-f));
  const long double su = 1.0L / (1.0L + std::exp(-u));
  const long double lhs = -(soft * std::log(su) + (1.0L - soft) * std::log(1.0L - su));
  const long double bce_hard = -(y * std::log(su) + (1.0L - y) * std::log(1.0L - su));
  const long double rhs = bce_hard - (soft - y) * u;
  EXPECT_NEAR(static_cast<double>(lhs - rhs), 0.0, 1e-15);

  const Vector v = Vector::Constant(1, 2.0), fv = Vector::Constant(1, 1.0), yv = Vector::Constant(1, 1.0);
  EXPECT_NEAR(bce_identity_gap(v, sigmoid(fv), yv, fv), 0.0, 1e-12);
}

TEST(BceIdentity, RandomInstances) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector u = testkit::random_normal(rng, 100, 3.0);
    const Vector f = testkit::random_normal(rng, 100, 3.0);
    const Vector y = testkit::random_bits(rng, 100);
    const double gap = bce_identity_gap(u, sigmoid(f), y, f);
    EXPECT_LE(std::abs(gap), 1e-9 * (1.0 + bce(u, y).value));
  }
}

TEST(BceIdentity, LengthMismatch) {
  EXPECT_THROW(bce_identity_gap(Vector::Zero(2), Vector::Zero(2), Vector::Zero(3), Vector::Zero(2)), Error);
}
