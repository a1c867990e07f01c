#pragma once

#include "fairadj/common.h"

namespace fairadj {

enum class ScoreScale { raw, logit };

// Model outputs over a dataset. Classification learners emit logits.
struct ScoreVector {
  Vector values;
  ScoreScale scale = ScoreScale::raw;

  Index size() const { return values.size(); }
};

// Unnormalized loss sum with per-example first and second derivatives
// with respect to the scores.
struct LossEval {
  double value = 0.0;
  Vector grad;
  Vector hess;
};

enum class LossKind { mse, bce };

// Logistic link. Results lie strictly inside (0, 1) for every finite input.
double sigmoid(double u);
Vector sigmoid(const Vector& u);

// Inverse link with p clamped to [1e-12, 1 - 1e-12].
double logit(double p);

inline constexpr double kProbabilityEpsilon = 1e-12;

// sum (u_i - y_i)^2
LossEval mse(const Vector& u, const Vector& y);

// -sum [y ln s(u) + (1-y) ln(1-s(u))] for soft labels y in [0,1].
// Evaluated as softplus(u) - y*u, which never takes the log of a saturated
// probability.
LossEval bce(const Vector& u, const Vector& y);

LossEval evaluate_loss(LossKind kind, const Vector& u, const Vector& y);

// BCE(u, soft) - [BCE(u, hard) - sum (sigmoid(f_i) - hard_i) * u_i].
// Zero up to rounding for every input when soft = sigmoid(f).
double bce_identity_gap(const Vector& u, const Vector& soft, const Vector& hard, const Vector& f);

}  // namespace fairadj
