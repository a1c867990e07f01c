#include "fairadj/theory.h"

#include <algorithm>
#include <cmath>

#include "fairadj/loss.h"
#include "fairadj/metrics.h"
#include "fairadj/random.h"
#include "fairadj/train.h"

namespace fairadj {
namespace {

void require_equal_lengths(std::initializer_list<const Vector*> vectors) {
  const Index n = (*vectors.begin())->size();
  for (const Vector* v : vectors) {
    if (v->size() != n) throw Error("theory check: vectors differ in length");
  }
}

double gap_squared(const Vector& scores, const Vector& labels, const Vector& protected_attr) {
  const double gap = group_contrast(protected_attr).dot(scores - labels);
  return gap * gap;
}

}  // namespace

double check_prop1_identity(const Vector& f_scores, const Vector& g_scores, const Vector& y) {
  require_equal_lengths({&f_scores, &g_scores, &y});
  const double lhs = mse(f_scores + g_scores, y).value - mse(f_scores, y).value;
  const double rhs = g_scores.squaredNorm() + 2.0 * (f_scores - y).dot(g_scores);
  return std::abs(lhs - rhs);
}

BoundCheck check_prop2_bound(const Vector& f, const Vector& h, const Vector& g, const Vector& y) {
  require_equal_lengths({&f, &h, &g, &y});
  BoundCheck out;
  out.lhs = mse(f + g, y).value - mse(h, y).value;
  out.rhs = 2.0 * (f - y).dot(g - (h - f));
  out.slack = out.rhs - out.lhs;
  return out;
}

TradeoffCheck check_prop4_tradeoff(const Vector& g_scores, double la_before, double la_after, double lambda) {
  const double norm_sq = g_scores.squaredNorm();
  TradeoffCheck out;
  out.margin = lambda * (la_before - la_after) - norm_sq;
  out.holds = out.margin >= -1e-6 * (1.0 + norm_sq);
  return out;
}

CrossEntropyBound check_prop5_bound(const Vector& f, const Vector& h, const Vector& g, const Vector& y) {
  require_equal_lengths({&f, &h, &g, &y});
  const Vector soft = sigmoid(f);
  const Vector adjusted = f + g;
  CrossEntropyBound out;
  out.identity_gap = std::max(std::abs(bce_identity_gap(adjusted, soft, y, f)),
                              std::abs(bce_identity_gap(h, soft, y, f)));
  out.lhs = bce(adjusted, y).value;
  out.rhs = bce(h, y).value + (soft - y).dot(g - (h - f));
  out.slack = out.rhs - out.lhs;
  return out;
}

IdentitySuite run_identity_suite(std::uint64_t seed, int instances, Index n) {
  Rng rng(seed);
  IdentitySuite out;
  out.instances = instances;
  auto normal_vector = [&](double scale) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
  };
  for (int k = 0; k < instances; ++k) {
    const Vector f = normal_vector(2.0), g = normal_vector(1.0), y = normal_vector(2.0);
    const double lhs = mse(f + g, y).value - mse(f, y).value;
    out.prop1_max_relative = std::max(out.prop1_max_relative, check_prop1_identity(f, g, y) / (1.0 + std::abs(lhs)));

    const Vector u = normal_vector(3.0), base = normal_vector(3.0);
    Vector hard(n);
    for (Index i = 0; i < n; ++i) hard[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double gap = bce_identity_gap(u, sigmoid(base), hard, base);
    out.bce_max_relative = std::max(out.bce_max_relative, std::abs(gap) / (1.0 + bce(u, hard).value));
  }
  return out;
}

Dataset make_synthetic(Task task, Index n, Index d, std::uint64_t seed) {
  if (n < 2 || d < 1) throw Error("make_synthetic: need n >= 2 and d >= 1");
  Rng rng(seed);
  Dataset ds;
  ds.task = task;
  ds.favorable_label = 1;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.protected_attr.resize(n);
  for (Index j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  Vector weights(d);
  for (Index j = 0; j < d; ++j) weights[j] = rng.normal();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index i = 0; i < n; ++i) {
    double p = rng.uniform() < 0.4 ? 1.0 : 0.0;
    if (i == 0) p = 1.0;
    if (i == 1) p = 0.0;
    ds.protected_attr[i] = p;
    for (Index j = 0; j < d; ++j) ds.features(i, j) = rng.normal() + (j % 2 == 0 ? 0.6 * p : 0.0);
    const double signal = scale * ds.features.row(i).dot(weights);
    if (task == Task::regression) {
      ds.labels[i] = signal - 0.8 * p + (1.0 + 0.5 * p) * rng.normal();
    } else {
      ds.labels[i] = rng.uniform() < sigmoid(signal - 0.8 * p + 0.2) ? 1.0 : 0.0;
    }
  }
  return ds;
}

EquivalenceResult run_linear_equivalence(const Dataset& data, double lambda, PenaltyKind kind) {
  TrainConfig cfg;
  cfg.task = Task::regression;
  cfg.learner = LearnerKind::linear;
  cfg.lambda = lambda;
  cfg.penalty = kind;

  const TrainedModel f = fit_baseline(data, cfg);
  const TrainedModel h = fit_joint(data, cfg);
  const TrainedModel g = fit_adjuster(f.model, AdjustData::labeled(data), cfg);

  EquivalenceResult out;
  out.beta_f = std::get<LinearModel>(f.model).beta;
  out.beta_a = std::get<LinearModel>(h.model).beta;
  out.beta_g = std::get<LinearModel>(g.model).beta;
  out.coefficient_gap = (out.beta_g - (out.beta_a - out.beta_f)).lpNorm<Eigen::Infinity>();
  const Vector adjusted = predict_adjusted(f.model, g.model, data.features).values;
  out.prediction_gap = (adjusted - predict(h.model, data.features).values).lpNorm<Eigen::Infinity>();
  out.joint_grad_norm = h.grad_norm;
  out.adjuster_grad_norm = g.grad_norm;
  return out;
}

MatchedRegime run_matched_regime(const Dataset& data, double lambda_joint, double fairness_tolerance) {
  TrainConfig cfg;
  cfg.task = data.task;
  cfg.learner = LearnerKind::linear;
  cfg.penalty = PenaltyKind::overprediction_gap_squared;
  cfg.lambda = lambda_joint;

  const TrainedModel f = fit_baseline(data, cfg);
  const TrainedModel h = fit_joint(data, cfg);
  const Vector f_scores = predict(f.model, data.features).values;
  const Vector h_scores = predict(h.model, data.features).values;
  const double target = gap_squared(h_scores, data.labels, data.protected_attr);
  const AdjustData adjust = AdjustData::labeled(data);

  struct Probe {
    Vector g;
    double fairness;
    double grad_norm;
  };
  auto probe = [&](double lambda) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    const TrainedModel g = fit_adjuster(f.model, adjust, c);
    Vector g_scores = predict(g.model, data.features).values;
    const double fairness = gap_squared(f_scores + g_scores, data.labels, data.protected_attr);
    return Probe{std::move(g_scores), fairness, g.grad_norm};
  };

  // L_a(f + g) decreases with the adjuster's lambda; bracket the target first.
  double lo = 0.0, hi = std::max(lambda_joint, 1e-3);
  Probe best = probe(hi);
  for (int i = 0; i < 60 && best.fairness > target; ++i) {
    lo = hi;
    hi *= 2.0;
    best = probe(hi);
  }
  double best_lambda = hi;
  for (int i = 0; i < 200 && std::abs(best.fairness - target) > fairness_tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    Probe p = probe(mid);
    if (p.fairness > target) lo = mid; else hi = mid;
    best = std::move(p);
    best_lambda = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }

  MatchedRegime out;
  out.f = f_scores;
  out.h = h_scores;
  out.g = best.g;
  out.y = data.labels;
  out.lambda_joint = lambda_joint;
  out.lambda_adjuster = best_lambda;
  out.fairness_mismatch = std::abs(best.fairness - target);
  out.max_grad_norm = std::max({f.grad_norm, h.grad_norm, best.grad_norm});
  return out;
}

TradeoffRun run_tradeoff(const Dataset& data, double lambda) {
  TrainConfig cfg;
  cfg.task = Task::regression;
  cfg.learner = LearnerKind::linear;
  cfg.penalty = PenaltyKind::overprediction_gap_squared;
  cfg.lambda = lambda;
  const TrainedModel f = fit_baseline(data, cfg);
  const TrainedModel g = fit_adjuster(f.model, AdjustData::labeled(data), cfg);
  const Vector f_scores = predict(f.model, data.features).values;
  const Vector g_scores = predict(g.model, data.features).values;

  TradeoffRun out;
  out.la_before = gap_squared(f_scores, data.labels, data.protected_attr);
  out.la_after = gap_squared(f_scores + g_scores, data.labels, data.protected_attr);
  out.adjustment_norm_sq = g_scores.squaredNorm();
  out.check = check_prop4_tradeoff(g_scores, out.la_before, out.la_after, lambda);
  return out;
}

std::vector<TheoryRow> verify_theory(std::uint64_t seed) {
  std::vector<TheoryRow> rows;

  const IdentitySuite ids = run_identity_suite(seed, 1000, 100);
  rows.push_back({"mse change identity (1000 x n=100)", true, ids.prop1_max_relative <= 1e-9,
                  ids.prop1_max_relative, "max relative discrepancy"});
  rows.push_back({"cross-entropy identity (1000 x n=100)", true, ids.bce_max_relative <= 1e-9, ids.bce_max_relative,
                  "max relative discrepancy"});

  const EquivalenceResult eq = run_linear_equivalence(make_synthetic(Task::regression, 500, 5, seed), 5.0);
  rows.push_back({"linear adjuster == joint (coefficients)", true, eq.coefficient_gap <= 1e-6, eq.coefficient_gap,
                  "|beta_g - (beta_a - beta_f)|_inf"});
  rows.push_back({"linear adjuster == joint (predictions)", true, eq.prediction_gap <= 1e-5, eq.prediction_gap,
                  "max |f + g - h|"});

  double mse_slack = INFINITY, ce_slack = INFINITY, margin = INFINITY;
  bool tradeoff_ok = true;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const MatchedRegime reg = run_matched_regime(make_synthetic(Task::regression, 300, 4, seed + 100 + k), 2.0);
    mse_slack = std::min(mse_slack, check_prop2_bound(reg.f, reg.h, reg.g, reg.y).slack);
    const MatchedRegime clf =
        run_matched_regime(make_synthetic(Task::classification, 400, 4, seed + 200 + k), 20.0);
    ce_slack = std::min(ce_slack, check_prop5_bound(clf.f, clf.h, clf.g, clf.y).slack);
    const TradeoffRun t = run_tradeoff(make_synthetic(Task::regression, 300, 4, seed + 300 + k), 1.0);
    margin = std::min(margin, t.check.margin);
    tradeoff_ok = tradeoff_ok && t.check.holds;
  }
  rows.push_back({"mse bound, converged linear (5 runs)", true, mse_slack >= -1e-4, mse_slack, "min slack"});
  rows.push_back({"cross-entropy bound, converged logistic (5 runs)", true, ce_slack >= -1e-4, ce_slack, "min slack"});
  rows.push_back({"accuracy-fairness trade-off (5 runs)", true, tradeoff_ok, margin, "min margin"});

  // Boosted trees only approximately satisfy the bound assumptions.
  const Dataset boosted = make_synthetic(Task::classification, 1000, 5, seed + 400);
  TrainConfig cfg;
  cfg.task = Task::classification;
  cfg.boost.rounds = 60;
  cfg.lambda = 2.0;
  const TrainedTriple triple = fit_triple(boosted, cfg);
  const Vector f = predict(triple.baseline, boosted.features).values;
  const Vector h = predict(triple.joint, boosted.features).values;
  const Vector g = predict(triple.adjuster, boosted.features).values;
  const CrossEntropyBound ce = check_prop5_bound(f, h, g, boosted.labels);
  rows.push_back({"cross-entropy bound, boosted trees (diagnostic)", false, true, ce.slack / boosted.rows(),
                  "slack / n"});
  rows.push_back({"delta loss, boosted trees (diagnostic)", false, true,
                  delta_loss(f, h, g, boosted.labels), "(1/n)(s(f)-y)^T(g-(h-f))"});
  return rows;
}

}  // namespace fairadj
