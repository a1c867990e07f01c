#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairadj/common.h"
#include "fairadj/data.h"
#include "fairadj/fairness.h"

namespace fairadj {

// |LHS - RHS| for  L(yhat + g, y) - L(yhat, y) = sum g^2 + 2 sum (yhat - y) g,
// with both sides evaluated directly.
double check_prop1_identity(const Vector& f_scores, const Vector& g_scores, const Vector& y);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
};

// lhs = MSE(f + g, y) - MSE(h, y),  rhs = 2 (f - y)^T (g - (h - f)).
BoundCheck check_prop2_bound(const Vector& f, const Vector& h, const Vector& g, const Vector& y);

struct TradeoffCheck {
  bool holds = false;
  double margin = 0.0;  // lambda (La_before - La_after) - sum g^2
};

// sum g^2 <= lambda (La_before - La_after) + 1e-6 (1 + sum g^2).
TradeoffCheck check_prop4_tradeoff(const Vector& g_scores, double la_before, double la_after, double lambda);

struct CrossEntropyBound {
  double lhs = 0.0;  // BCE(f + g, y)
  double rhs = 0.0;  // BCE(h, y) + (sigmoid(f) - y)^T (g - (h - f))
  double slack = 0.0;
  double identity_gap = 0.0;  // max |bce_identity_gap| at u = f + g and u = h
};

CrossEntropyBound check_prop5_bound(const Vector& f, const Vector& h, const Vector& g, const Vector& y);

struct IdentitySuite {
  int instances = 0;
  double prop1_max_relative = 0.0;  // |LHS - RHS| / (1 + |LHS|)
  double bce_max_relative = 0.0;    // |gap| / (1 + |BCE(u, y)|)
};

// Randomized instances of both identities with vectors of length n.
IdentitySuite run_identity_suite(std::uint64_t seed, int instances, Index n);

// Synthetic data with a protected group that shifts half of the features
// and the outcome. Regression noise is larger and offset in the protected
// group. Both groups are always present.
Dataset make_synthetic(Task task, Index n, Index d, std::uint64_t seed);

// Linear baseline / joint / adjuster on the same data with a gap penalty.
struct EquivalenceResult {
  Vector beta_f, beta_a, beta_g;
  double coefficient_gap = 0.0;  // |beta_g - (beta_a - beta_f)|_inf
  double prediction_gap = 0.0;   // max |(f + g)(x) - h(x)|
  double joint_grad_norm = 0.0;
  double adjuster_grad_norm = 0.0;
};

EquivalenceResult run_linear_equivalence(const Dataset& data, double lambda,
                                         PenaltyKind kind = PenaltyKind::overprediction_gap_squared);

// Converged linear models with the adjuster's lambda bisected until
// |L_a(f + g) - L_a(h)| <= fairness_tolerance (gap-squared penalty).
struct MatchedRegime {
  Vector f, h, g, y;
  double lambda_joint = 0.0;
  double lambda_adjuster = 0.0;
  double fairness_mismatch = 0.0;
  double max_grad_norm = 0.0;
};

MatchedRegime run_matched_regime(const Dataset& data, double lambda_joint, double fairness_tolerance = 1e-9);

// Converged linear regression adjuster with objective sum g^2 + lambda L_a
// (gap-squared), checked against the trade-off inequality.
struct TradeoffRun {
  TradeoffCheck check;
  double la_before = 0.0;
  double la_after = 0.0;
  double adjustment_norm_sq = 0.0;
};

TradeoffRun run_tradeoff(const Dataset& data, double lambda);

struct TheoryRow {
  std::string name;
  bool hard = true;  // false: diagnostic only, never fails the run
  bool passed = true;
  double value = 0.0;
  std::string detail;
};

// Every check on synthetic data derived from seed.
std::vector<TheoryRow> verify_theory(std::uint64_t seed);

}  // namespace fairadj
