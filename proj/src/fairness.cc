#include "fairadj/fairness.h"

#include <cmath>
#include <string>

namespace fairadj {
namespace {

void require_same_length(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error("fairness: scores and protected attribute differ in length");
}

Vector adversary_logits(const Adversary& adv, const Vector& scores) {
  return (adv.slope * scores.array() + adv.intercept).matrix();
}

}  // namespace

Adversary Adversary::initial(const Vector& protected_attr, double step_size, int steps_per_round) {
  if (protected_attr.size() == 0) throw Error("adversary: empty protected attribute");
  Adversary adv;
  adv.slope = 0.0;
  adv.intercept = logit(protected_attr.mean());
  adv.step_size = step_size;
  adv.steps_per_round = steps_per_round;
  return adv;
}

double Adversary::loss(const Vector& scores, const Vector& protected_attr) const {
  require_same_length(scores, protected_attr);
  return bce(adversary_logits(*this, scores), protected_attr).value;
}

Adversary adversary_update(const Adversary& adversary, const Vector& scores, const Vector& protected_attr) {
  require_same_length(scores, protected_attr);
  const auto n = static_cast<double>(scores.size());
  Adversary adv = adversary;
  for (int step = 0; step < adv.steps_per_round; ++step) {
    const Vector residual = sigmoid(adversary_logits(adv, scores)) - protected_attr;
    const double d_slope = residual.dot(scores) / n;
    const double d_intercept = residual.sum() / n;
    adv.slope -= adv.step_size * d_slope;
    adv.intercept -= adv.step_size * d_intercept;
    if (!std::isfinite(adv.slope) || !std::isfinite(adv.intercept)) {
      throw Error("adversary_update: non-finite parameters after step " + std::to_string(step + 1));
    }
  }
  return adv;
}

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::adversarial: return "adversarial";
    case PenaltyKind::overprediction_gap: return "gap";
    case PenaltyKind::overprediction_gap_squared: return "gap-squared";
  }
  return "?";
}

PenaltyKind parse_penalty(std::string_view name) {
  if (name == "adversarial") return PenaltyKind::adversarial;
  if (name == "gap") return PenaltyKind::overprediction_gap;
  if (name == "gap-squared") return PenaltyKind::overprediction_gap_squared;
  throw Error("unknown penalty '" + std::string(name) + "' (expected adversarial, gap or gap-squared)");
}

FairnessPenalty FairnessPenalty::adversarial(double lambda, Adversary adversary) {
  if (lambda < 0.0) throw Error("penalty strength must be non-negative");
  return FairnessPenalty{PenaltyKind::adversarial, lambda, adversary, std::nullopt};
}

FairnessPenalty FairnessPenalty::gap(double lambda, Vector labels, bool squared) {
  if (lambda < 0.0) throw Error("penalty strength must be non-negative");
  return FairnessPenalty{squared ? PenaltyKind::overprediction_gap_squared : PenaltyKind::overprediction_gap, lambda,
                         std::nullopt, std::move(labels)};
}

Vector group_contrast(const Vector& protected_attr) {
  Index g1 = 0;
  for (Index i = 0; i < protected_attr.size(); ++i) g1 += protected_attr[i] == 1.0;
  const Index g2 = protected_attr.size() - g1;
  if (g1 == 0 || g2 == 0) throw Error("overprediction gap: empty protected group");
  Vector c(protected_attr.size());
  for (Index i = 0; i < c.size(); ++i) {
    c[i] = protected_attr[i] == 1.0 ? 1.0 / static_cast<double>(g1) : -1.0 / static_cast<double>(g2);
  }
  return c;
}

PenaltyEval fairness_grad(const FairnessPenalty& penalty, const Vector& scores, const Vector& protected_attr) {
  require_same_length(scores, protected_attr);
  PenaltyEval out;
  if (penalty.kind == PenaltyKind::adversarial) {
    if (!penalty.adversary) throw Error("adversarial penalty requires an adversary");
    const Adversary& adv = *penalty.adversary;
    const Vector residual = sigmoid(adversary_logits(adv, scores)) - protected_attr;
    out.value = -adv.loss(scores, protected_attr);
    out.grad = -adv.slope * residual;
    return out;
  }
  if (!penalty.labels) throw Error("overprediction gap penalty requires labels");
  if (penalty.labels->size() != scores.size()) throw Error("overprediction gap: labels differ in length");
  const Vector c = group_contrast(protected_attr);
  const double gap = c.dot(scores - *penalty.labels);
  if (penalty.kind == PenaltyKind::overprediction_gap) {
    out.value = gap;
    out.grad = c;
  } else {
    out.value = gap * gap;
    out.grad = 2.0 * gap * c;
  }
  return out;
}

GradHessBatch combined_grad_hess(const LossEval& primary, const FairnessPenalty& penalty, const Vector& scores,
                                 const Vector& protected_attr) {
  if (primary.grad.size() != scores.size() || primary.hess.size() != scores.size()) {
    throw Error("combined_grad_hess: loss and scores differ in length");
  }
  GradHessBatch batch{primary.grad, primary.hess};
  if (penalty.lambda != 0.0) {
    batch.grad += penalty.lambda * fairness_grad(penalty, scores, protected_attr).grad;
  }
  return floor_hessian(std::move(batch));
}

}  // namespace fairadj
