#include "fairadj/loss.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairadj {
namespace {

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
}

// log(1 + e^u) without overflow.
double softplus(double u) {
  return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

}  // namespace

double sigmoid(double u) {
  // Largest double below 1 and smallest positive normal bound the output.
  constexpr double hi = 1.0 - 0x1.0p-53;
  constexpr double lo = std::numeric_limits<double>::min();
  double s;
  if (u >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-u));
  } else {
    const double e = std::exp(u);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

Vector sigmoid(const Vector& u) {
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) out[i] = sigmoid(u[i]);
  return out;
}

double logit(double p) {
  p = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return std::log(p) - std::log1p(-p);
}

LossEval mse(const Vector& u, const Vector& y) {
  require_same_length(u, y, "mse");
  LossEval out;
  const Vector r = u - y;
  out.value = r.squaredNorm();
  out.grad = 2.0 * r;
  out.hess = Vector::Constant(u.size(), 2.0);
  return out;
}

LossEval bce(const Vector& u, const Vector& y) {
  require_same_length(u, y, "bce");
  LossEval out;
  out.grad.resize(u.size());
  out.hess.resize(u.size());
  double total = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    if (!(y[i] >= 0.0 && y[i] <= 1.0)) {
      throw Error("bce: label outside [0,1] at index " + std::to_string(i));
    }
    total += softplus(u[i]) - y[i] * u[i];
    const double p = sigmoid(u[i]);
    out.grad[i] = p - y[i];
    // s(u)(1 - s(u)) == s(u) s(-u); the product form keeps it positive when saturated.
    out.hess[i] = p * sigmoid(-u[i]);
  }
  out.value = total;
  return out;
}

LossEval evaluate_loss(LossKind kind, const Vector& u, const Vector& y) {
  return kind == LossKind::mse ? mse(u, y) : bce(u, y);
}

double bce_identity_gap(const Vector& u, const Vector& soft, const Vector& hard, const Vector& f) {
  require_same_length(u, soft, "bce_identity_gap");
  require_same_length(u, hard, "bce_identity_gap");
  require_same_length(u, f, "bce_identity_gap");
  const double correction = (sigmoid(f) - hard).dot(u);
  return bce(u, soft).value - (bce(u, hard).value - correction);
}

}  // namespace fairadj
