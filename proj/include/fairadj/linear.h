#pragma once

#include "fairadj/common.h"
#include "fairadj/loss.h"

namespace fairadj {

// beta holds d feature coefficients followed by the intercept.
struct LinearModel {
  Vector beta;
  Task task = Task::regression;

  Index features() const { return beta.size() - 1; }
  double intercept() const { return beta[beta.size() - 1]; }
};

// [X | 1]
Matrix with_intercept(const Matrix& features);

struct OlsOptions {
  bool fit_intercept = true;
};

// Least squares through a column-pivoted QR of the augmented design, plus one
// step of iterative refinement on the normal equations. Throws when the
// design is rank deficient, quoting its condition number.
LinearModel ols_fit(const Matrix& features, const Vector& y, OlsOptions options = {});

struct LogRegFit {
  LinearModel model;
  double loss = 0.0;       // BCE(X beta, y) + l2 |beta|^2
  double grad_norm = 0.0;  // Euclidean norm of the objective gradient
  int steps = 0;
};

// Full-batch gradient descent from beta = 0 on BCE(X beta, y) + l2 |beta|^2.
// Labels may be soft (in [0,1]).
LogRegFit logreg_fit(const Matrix& features, const Vector& y, int steps, double step_size, double l2);

ScoreVector predict(const LinearModel& model, const Matrix& features);

}  // namespace fairadj
