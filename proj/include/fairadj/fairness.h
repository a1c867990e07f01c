#pragma once

#include <optional>
#include <string_view>

#include "fairadj/boosting.h"
#include "fairadj/common.h"
#include "fairadj/loss.h"

namespace fairadj {

// Logistic adversary predicting protected group membership from the model
// score alone: P(protected = 1 | u) = sigmoid(slope * u + intercept).
struct Adversary {
  double slope = 0.0;
  double intercept = 0.0;
  double step_size = 0.1;
  int steps_per_round = 5;

  // slope 0, intercept logit(mean(protected)).
  static Adversary initial(const Vector& protected_attr, double step_size = 0.1, int steps_per_round = 5);

  // L_A: summed BCE of the adversary's predictions against the protected attribute.
  double loss(const Vector& scores, const Vector& protected_attr) const;
};

// steps_per_round full-batch gradient steps on the adversary's mean BCE.
// The mean keeps the admissible step size independent of n.
Adversary adversary_update(const Adversary& adversary, const Vector& scores, const Vector& protected_attr);

enum class PenaltyKind { adversarial, overprediction_gap, overprediction_gap_squared };

std::string_view to_string(PenaltyKind kind);
// "adversarial", "gap", "gap-squared"
PenaltyKind parse_penalty(std::string_view name);

// lambda * L_a(u). The gap kinds close over the true labels.
struct FairnessPenalty {
  PenaltyKind kind = PenaltyKind::adversarial;
  double lambda = 0.0;
  std::optional<Adversary> adversary;
  std::optional<Vector> labels;

  static FairnessPenalty adversarial(double lambda, Adversary adversary);
  static FairnessPenalty gap(double lambda, Vector labels, bool squared = false);

  bool needs_labels() const { return kind != PenaltyKind::adversarial; }
};

struct PenaltyEval {
  double value = 0.0;  // L_a(u), without lambda
  Vector grad;         // dL_a/du
};

// c_i = 1/|G1| for protected rows and -1/|G2| otherwise, so that the
// overprediction gap equals c . (u - y).
Vector group_contrast(const Vector& protected_attr);

// Adversarial: L_a = -L_A at the current adversary, so that adding
// lambda * grad to the task gradient pushes scores up the adversary's loss.
// Gap: mean_{G1}(u - y) - mean_{G2}(u - y). Gap squared: its square.
PenaltyEval fairness_grad(const FairnessPenalty& penalty, const Vector& scores, const Vector& protected_attr);

// grad = primary.grad + lambda * dL_a/du; hess = primary.hess, floored.
GradHessBatch combined_grad_hess(const LossEval& primary, const FairnessPenalty& penalty, const Vector& scores,
                                 const Vector& protected_attr);

}  // namespace fairadj
