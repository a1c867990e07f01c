#pragma once

#include <cstdint>
#include <optional>

#include "fairadj/boosting.h"
#include "fairadj/data.h"
#include "fairadj/fairness.h"
#include "fairadj/model.h"

namespace fairadj {

enum class LearnerKind { linear, boosted };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner(std::string_view name);

struct TrainConfig {
  Task task = Task::classification;
  LearnerKind learner = LearnerKind::boosted;
  BoostParams boost;
  double lambda = 0.0;
  PenaltyKind penalty = PenaltyKind::adversarial;
  double adv_step_size = 0.1;
  int adv_steps_per_round = 5;
  // Training is deterministic; the seed is carried for bookkeeping only.
  std::uint64_t seed = 0;
  // Linear learners: Newton iterations stop once |gradient| <= tolerance.
  double tolerance = 1e-10;
  int max_iterations = 100;

  void validate() const;
};

LossKind task_loss(Task task);

// Identity for regression, sigmoid for classification.
Vector apply_link(Task task, const Vector& scores);

struct TrainedModel {
  Model model;
  Vector train_scores;
  std::optional<Adversary> adversary;  // final adversary state, when one was trained
  double grad_norm = 0.0;              // linear learners only
  int iterations = 0;
};

// Rows an adjuster is tuned on. Labels are optional and only the gap
// penalties read them.
struct AdjustData {
  Matrix features;
  Vector protected_attr;
  std::optional<Vector> labels;

  static AdjustData labeled(const Dataset& dataset);
  static AdjustData unlabeled(const Dataset& dataset);
};

// L_B = L(f(X), Y); lambda and penalty settings are ignored.
TrainedModel fit_baseline(const Dataset& train, const TrainConfig& config);
TrainedModel fit_baseline(const Dataset& train, const TrainConfig& config, const FeatureIndex& index);

// L_AD = L(h(X), Y) + lambda L_a(h(X)). With boosted trees and the
// adversarial penalty, the adversary takes its update after every tree.
TrainedModel fit_joint(const Dataset& train, const TrainConfig& config);
TrainedModel fit_joint(const Dataset& train, const TrainConfig& config, const FeatureIndex& index);

// L_O = L(f + g, yhat) + lambda L_a(f + g) with yhat = link(f(X)) held fixed.
// g is an additive model in score space starting from zero.
TrainedModel fit_adjuster(const Model& baseline, const AdjustData& data, const TrainConfig& config);
TrainedModel fit_adjuster(const Model& baseline, const AdjustData& data, const TrainConfig& config,
                          const FeatureIndex& index);

// f(X) + g(X) in score space.
ScoreVector predict_adjusted(const Model& baseline, const Model& adjuster, const Matrix& features);

struct TrainedTriple {
  Model baseline;
  Model joint;
  Model adjuster;
  double lambda = 0.0;
  Vector pseudo_labels;
};

TrainedTriple fit_triple(const Dataset& train, const TrainConfig& config);

// Smooth convex objective over linear scores u = offset + design * beta:
//   L(u, targets) + lambda * L_a(u)
// restricted to the gap penalties, minimized by damped Newton steps.
struct LinearObjective {
  Matrix design;  // includes the intercept column
  Vector offset;
  LossKind loss = LossKind::mse;
  Vector targets;
  std::optional<FairnessPenalty> penalty;
  Vector protected_attr;

  double value(const Vector& beta) const;
  Vector gradient(const Vector& beta) const;
};

struct LinearSolve {
  Vector beta;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

LinearSolve minimize_linear(const LinearObjective& objective, double tolerance, int max_iterations);

}  // namespace fairadj
