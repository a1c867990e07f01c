#include "fairadj/train.h"

#include <cmath>
#include <string>

namespace fairadj {
namespace {

void require_rows(const Matrix& features, const Vector& protected_attr) {
  if (features.rows() == 0) throw Error("training set is empty");
  if (protected_attr.size() != features.rows()) {
    throw Error("protected attribute and features differ in length");
  }
}

double initial_score(Task task, const Vector& labels) {
  const double mean = labels.mean();
  return task == Task::classification ? logit(mean) : mean;
}

FairnessPenalty make_penalty(const TrainConfig& config, const Vector& protected_attr,
                             const std::optional<Vector>& labels) {
  if (config.penalty == PenaltyKind::adversarial) {
    return FairnessPenalty::adversarial(
        config.lambda, Adversary::initial(protected_attr, config.adv_step_size, config.adv_steps_per_round));
  }
  if (!labels) {
    throw Error(std::string("penalty '") + std::string(to_string(config.penalty)) +
                "' needs true labels, but the adjustment data is unlabeled");
  }
  return FairnessPenalty::gap(config.lambda, *labels,
                              config.penalty == PenaltyKind::overprediction_gap_squared);
}

TrainedModel from_linear_solve(const LinearSolve& solve, Task task, const Matrix& design) {
  TrainedModel out;
  LinearModel model{solve.beta, task};
  out.train_scores = design * solve.beta;
  out.model = std::move(model);
  out.grad_norm = solve.grad_norm;
  out.iterations = solve.iterations;
  return out;
}

TrainedModel fit_linear(const Matrix& features, const Vector& offset, const Vector& targets,
                        const Vector& protected_attr, const std::optional<FairnessPenalty>& penalty,
                        const TrainConfig& config) {
  if (penalty && penalty->kind == PenaltyKind::adversarial && penalty->lambda != 0.0) {
    throw Error("linear learners support only the gap penalties");
  }
  LinearObjective objective;
  objective.design = with_intercept(features);
  objective.offset = offset;
  objective.loss = task_loss(config.task);
  objective.targets = targets;
  if (penalty && penalty->lambda != 0.0) objective.penalty = penalty;
  objective.protected_attr = protected_attr;
  const LinearSolve solve = minimize_linear(objective, config.tolerance, config.max_iterations);
  return from_linear_solve(solve, config.task, objective.design);
}

}  // namespace

std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::linear ? "linear" : "boosted";
}

LearnerKind parse_learner(std::string_view name) {
  if (name == "linear") return LearnerKind::linear;
  if (name == "boosted") return LearnerKind::boosted;
  throw Error("unknown learner '" + std::string(name) + "' (expected linear or boosted)");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (adv_steps_per_round < 0) throw Error("adversary steps per round must be non-negative");
  if (!(adv_step_size > 0.0)) throw Error("adversary step size must be positive");
}

LossKind task_loss(Task task) {
  return task == Task::classification ? LossKind::bce : LossKind::mse;
}

Vector apply_link(Task task, const Vector& scores) {
  return task == Task::classification ? sigmoid(scores) : scores;
}

AdjustData AdjustData::labeled(const Dataset& dataset) {
  return AdjustData{dataset.features, dataset.protected_attr, dataset.labels};
}

AdjustData AdjustData::unlabeled(const Dataset& dataset) {
  return AdjustData{dataset.features, dataset.protected_attr, std::nullopt};
}

double LinearObjective::value(const Vector& beta) const {
  const Vector u = offset + design * beta;
  double total = evaluate_loss(loss, u, targets).value;
  if (penalty) total += penalty->lambda * fairness_grad(*penalty, u, protected_attr).value;
  return total;
}

Vector LinearObjective::gradient(const Vector& beta) const {
  const Vector u = offset + design * beta;
  Vector grad_u = evaluate_loss(loss, u, targets).grad;
  if (penalty) grad_u += penalty->lambda * fairness_grad(*penalty, u, protected_attr).grad;
  return design.transpose() * grad_u;
}

LinearSolve minimize_linear(const LinearObjective& objective, double tolerance, int max_iterations) {
  const Matrix& design = objective.design;
  if (objective.offset.size() != design.rows() || objective.targets.size() != design.rows()) {
    throw Error("minimize_linear: offset/targets differ in length from the design");
  }
  if (objective.penalty && objective.penalty->kind == PenaltyKind::adversarial) {
    throw Error("minimize_linear: the adversarial penalty is not convex");
  }
  std::optional<Vector> contrast_proj;
  if (objective.penalty && objective.penalty->kind == PenaltyKind::overprediction_gap_squared) {
    contrast_proj = design.transpose() * group_contrast(objective.protected_attr);
  }

  LinearSolve out;
  out.beta = Vector::Zero(design.cols());
  Vector grad = objective.gradient(out.beta);
  double value = objective.value(out.beta);
  for (int it = 0; it < max_iterations; ++it) {
    if (grad.norm() <= tolerance) break;
    const Vector u = objective.offset + design * out.beta;
    const LossEval eval = evaluate_loss(objective.loss, u, objective.targets);
    Matrix hessian = design.transpose() * eval.hess.asDiagonal() * design;
    if (contrast_proj) hessian += 2.0 * objective.penalty->lambda * (*contrast_proj) * contrast_proj->transpose();
    const Vector step = -hessian.ldlt().solve(grad);
    if (!step.allFinite()) throw Error("minimize_linear: singular Newton system");

    // Backtracking; near the optimum the objective stalls at rounding level, so a
    // strictly smaller gradient norm is accepted as progress too.
    double t = 1.0;
    const double slope = grad.dot(step);
    bool moved = false;
    while (t > 1e-12) {
      const Vector candidate = out.beta + t * step;
      const double cand_value = objective.value(candidate);
      const Vector cand_grad = objective.gradient(candidate);
      if (cand_value <= value + 1e-4 * t * slope || cand_grad.norm() < grad.norm()) {
        out.beta = candidate;
        value = cand_value;
        grad = cand_grad;
        moved = true;
        break;
      }
      t /= 2.0;
    }
    out.iterations = it + 1;
    if (!moved) break;
  }
  out.objective = value;
  out.grad_norm = grad.norm();
  return out;
}

TrainedModel fit_baseline(const Dataset& train, const TrainConfig& config) {
  if (config.learner == LearnerKind::linear) {
    return fit_baseline(train, config, FeatureIndex(Matrix(0, train.cols())));
  }
  return fit_baseline(train, config, FeatureIndex(train.features));
}

TrainedModel fit_baseline(const Dataset& train, const TrainConfig& config, const FeatureIndex& index) {
  config.validate();
  require_rows(train.features, train.protected_attr);
  if (config.learner == LearnerKind::linear) {
    if (config.task == Task::regression) {
      TrainedModel out;
      LinearModel model = ols_fit(train.features, train.labels);
      const Matrix design = with_intercept(train.features);
      out.train_scores = design * model.beta;
      out.grad_norm = (design.transpose() * (2.0 * (out.train_scores - train.labels))).norm();
      out.model = std::move(model);
      return out;
    }
    return fit_linear(train.features, Vector::Zero(train.rows()), train.labels, train.protected_attr, std::nullopt,
                      config);
  }

  BoostParams params = config.boost;
  params.base_score = initial_score(config.task, train.labels);
  const LossKind loss = task_loss(config.task);
  const Vector& y = train.labels;
  auto gradients = [&](const Vector& scores, int) {
    LossEval eval = evaluate_loss(loss, scores, y);
    return GradHessBatch{std::move(eval.grad), std::move(eval.hess)};
  };
  BoostFit fit = boost_fit(train.features, index, gradients, params, config.task);
  return TrainedModel{std::move(fit.model), std::move(fit.train_scores), std::nullopt, 0.0, params.rounds};
}

TrainedModel fit_joint(const Dataset& train, const TrainConfig& config) {
  if (config.learner == LearnerKind::linear) {
    return fit_joint(train, config, FeatureIndex(Matrix(0, train.cols())));
  }
  return fit_joint(train, config, FeatureIndex(train.features));
}

TrainedModel fit_joint(const Dataset& train, const TrainConfig& config, const FeatureIndex& index) {
  config.validate();
  require_rows(train.features, train.protected_attr);
  FairnessPenalty penalty = make_penalty(config, train.protected_attr, train.labels);
  if (config.learner == LearnerKind::linear) {
    return fit_linear(train.features, Vector::Zero(train.rows()), train.labels, train.protected_attr, penalty,
                      config);
  }

  BoostParams params = config.boost;
  params.base_score = initial_score(config.task, train.labels);
  const LossKind loss = task_loss(config.task);
  const Vector& y = train.labels;
  const Vector& p = train.protected_attr;
  auto gradients = [&](const Vector& scores, int) {
    return combined_grad_hess(evaluate_loss(loss, scores, y), penalty, scores, p);
  };
  auto hook = [&](const Vector& scores, int) {
    if (penalty.adversary) penalty.adversary = adversary_update(*penalty.adversary, scores, p);
  };
  BoostFit fit = boost_fit(train.features, index, gradients, params, config.task, hook);
  return TrainedModel{std::move(fit.model), std::move(fit.train_scores), penalty.adversary, 0.0, params.rounds};
}

TrainedModel fit_adjuster(const Model& baseline, const AdjustData& data, const TrainConfig& config) {
  if (config.learner == LearnerKind::linear) {
    return fit_adjuster(baseline, data, config, FeatureIndex(Matrix(0, data.features.cols())));
  }
  return fit_adjuster(baseline, data, config, FeatureIndex(data.features));
}

TrainedModel fit_adjuster(const Model& baseline, const AdjustData& data, const TrainConfig& config,
                          const FeatureIndex& index) {
  config.validate();
  require_rows(data.features, data.protected_attr);
  if (feature_count(baseline) != data.features.cols()) {
    throw Error("fit_adjuster: baseline expects " + std::to_string(feature_count(baseline)) +
                " features, adjustment data has " + std::to_string(data.features.cols()));
  }
  FairnessPenalty penalty = make_penalty(config, data.protected_attr, data.labels);
  const Vector base_scores = predict(baseline, data.features).values;
  const Vector pseudo = apply_link(config.task, base_scores);

  if (config.learner == LearnerKind::linear) {
    TrainedModel out = fit_linear(data.features, base_scores, pseudo, data.protected_attr, penalty, config);
    return out;
  }

  BoostParams params = config.boost;
  params.base_score = 0.0;
  const LossKind loss = task_loss(config.task);
  const Vector& p = data.protected_attr;
  auto gradients = [&](const Vector& adjustment, int) {
    const Vector combined = base_scores + adjustment;
    return combined_grad_hess(evaluate_loss(loss, combined, pseudo), penalty, combined, p);
  };
  auto hook = [&](const Vector& adjustment, int) {
    if (penalty.adversary) penalty.adversary = adversary_update(*penalty.adversary, base_scores + adjustment, p);
  };
  BoostFit fit = boost_fit(data.features, index, gradients, params, config.task, hook);
  return TrainedModel{std::move(fit.model), std::move(fit.train_scores), penalty.adversary, 0.0, params.rounds};
}

ScoreVector predict_adjusted(const Model& baseline, const Model& adjuster, const Matrix& features) {
  ScoreVector base = predict(baseline, features);
  const ScoreVector adjustment = predict(adjuster, features);
  base.values += adjustment.values;
  return base;
}

TrainedTriple fit_triple(const Dataset& train, const TrainConfig& config) {
  const FeatureIndex index = config.learner == LearnerKind::boosted ? FeatureIndex(train.features)
                                                                    : FeatureIndex(Matrix(0, train.cols()));
  TrainedTriple out;
  TrainedModel f = fit_baseline(train, config, index);
  out.pseudo_labels = apply_link(config.task, predict(f.model, train.features).values);
  out.joint = fit_joint(train, config, index).model;
  out.adjuster = fit_adjuster(f.model, AdjustData::labeled(train), config, index).model;
  out.baseline = std::move(f.model);
  out.lambda = config.lambda;
  return out;
}

}  // namespace fairadj
