#include "fairadj/linear.h"

#include <cmath>
#include <sstream>

namespace fairadj {

Matrix with_intercept(const Matrix& features) {
  Matrix out(features.rows(), features.cols() + 1);
  out.leftCols(features.cols()) = features;
  out.col(features.cols()).setOnes();
  return out;
}

LinearModel ols_fit(const Matrix& features, const Vector& y, OlsOptions options) {
  if (features.rows() != y.size()) throw Error("ols_fit: feature rows and targets differ in length");
  if (features.rows() == 0) throw Error("ols_fit: empty training set");
  const Matrix design = options.fit_intercept ? with_intercept(features) : features;

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) {
    Eigen::JacobiSVD<Matrix> svd(design);
    const Vector s = svd.singularValues();
    const double cond = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
    std::ostringstream msg;
    msg << "ols_fit: design matrix is rank deficient (rank " << qr.rank() << " of " << design.cols()
        << ", condition number " << cond << ")";
    throw Error(msg.str());
  }
  Vector beta = qr.solve(y);
  // One refinement step: solve for the correction to the normal-equation residual.
  const Vector residual = y - design * beta;
  beta += qr.solve(residual);

  LinearModel model;
  model.task = Task::regression;
  model.beta = Vector::Zero(features.cols() + 1);
  if (options.fit_intercept) {
    model.beta = beta;
  } else {
    model.beta.head(features.cols()) = beta;
  }
  return model;
}

LogRegFit logreg_fit(const Matrix& features, const Vector& y, int steps, double step_size, double l2) {
  if (features.rows() != y.size()) throw Error("logreg_fit: feature rows and labels differ in length");
  if (steps < 1) throw Error("logreg_fit: steps must be at least 1");
  for (Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) throw Error("logreg_fit: label outside [0,1]");
  }
  const Matrix design = with_intercept(features);
  Vector beta = Vector::Zero(design.cols());

  auto objective = [&](const Vector& b) {
    const LossEval eval = bce(design * b, y);
    return std::pair{eval.value + l2 * b.squaredNorm(),
                     Vector(design.transpose() * eval.grad + 2.0 * l2 * b)};
  };

  LogRegFit fit;
  auto [loss, grad] = objective(beta);
  for (int step = 1; step <= steps; ++step) {
    beta -= step_size * grad;
    std::tie(loss, grad) = objective(beta);
    if (!std::isfinite(loss) || !beta.allFinite()) {
      throw Error("logreg_fit: diverged at step " + std::to_string(step));
    }
    fit.steps = step;
  }
  fit.model = LinearModel{beta, Task::classification};
  fit.loss = loss;
  fit.grad_norm = grad.norm();
  return fit;
}

ScoreVector predict(const LinearModel& model, const Matrix& features) {
  if (features.cols() != model.features()) {
    throw Error("predict: model expects " + std::to_string(model.features()) + " features, got " +
                std::to_string(features.cols()));
  }
  ScoreVector out;
  out.values = features * model.beta.head(model.features());
  out.values.array() += model.intercept();
  out.scale = model.task == Task::classification ? ScoreScale::logit : ScoreScale::raw;
  return out;
}

}  // namespace fairadj
