#pragma once

#include <span>

#include "fairadj/common.h"
#include "fairadj/data.h"

namespace fairadj {

struct EvalResult {
  double accuracy = 0.0;
  // protected favorable rate / unprotected favorable rate; 0 when the
  // numerator is 0. Meaningless when di_defined is false.
  double disparate_impact = 0.0;
  bool di_defined = false;
  Index n = 0;
  double favorable_rate_protected = 0.0;
  double favorable_rate_unprotected = 0.0;
};

// Thresholds logits at 0 (probability 0.5). A prediction is favorable when
// the predicted label equals dataset.favorable_label. DI is undefined when
// either group is empty or the unprotected rate is 0.
EvalResult evaluate(const Vector& logits, const Dataset& dataset);

// (1/n) (sigmoid(f) - y)^T (g - (h - f))
double delta_loss(const Vector& f_logits, const Vector& h_logits, const Vector& g_logits, const Vector& y);

struct AggregateRow {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;  // 1.96 * sample std / sqrt(n_runs)
  Index n_runs = 0;
};

AggregateRow aggregate(std::span<const double> values);

}  // namespace fairadj
