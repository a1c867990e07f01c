#include "fairadj/metrics.h"

#include <cmath>

#include "fairadj/loss.h"

namespace fairadj {

EvalResult evaluate(const Vector& logits, const Dataset& dataset) {
  if (dataset.task != Task::classification) throw Error("evaluate: classification task required");
  if (logits.size() != dataset.rows()) throw Error("evaluate: scores and dataset differ in length");
  EvalResult out;
  out.n = dataset.rows();
  Index correct = 0, fav_prot = 0, fav_unprot = 0, n_prot = 0;
  for (Index i = 0; i < out.n; ++i) {
    const int predicted = logits[i] > 0.0 ? 1 : 0;
    correct += predicted == static_cast<int>(dataset.labels[i]);
    const bool favorable = predicted == dataset.favorable_label;
    if (dataset.protected_attr[i] == 1.0) {
      ++n_prot;
      fav_prot += favorable;
    } else {
      fav_unprot += favorable;
    }
  }
  const Index n_unprot = out.n - n_prot;
  out.accuracy = out.n > 0 ? static_cast<double>(correct) / static_cast<double>(out.n) : 0.0;
  if (n_prot > 0) out.favorable_rate_protected = static_cast<double>(fav_prot) / static_cast<double>(n_prot);
  if (n_unprot > 0) out.favorable_rate_unprotected = static_cast<double>(fav_unprot) / static_cast<double>(n_unprot);
  out.di_defined = n_prot > 0 && n_unprot > 0 && fav_unprot > 0;
  if (out.di_defined) out.disparate_impact = out.favorable_rate_protected / out.favorable_rate_unprotected;
  return out;
}

double delta_loss(const Vector& f_logits, const Vector& h_logits, const Vector& g_logits, const Vector& y) {
  const Index n = f_logits.size();
  if (h_logits.size() != n || g_logits.size() != n || y.size() != n) {
    throw Error("delta_loss: length mismatch");
  }
  if (n == 0) throw Error("delta_loss: empty input");
  return (sigmoid(f_logits) - y).dot(g_logits - (h_logits - f_logits)) / static_cast<double>(n);
}

AggregateRow aggregate(std::span<const double> values) {
  if (values.size() < 2) throw Error("aggregate: at least 2 values required");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return AggregateRow{mean, 1.96 * sd / std::sqrt(n), static_cast<Index>(values.size())};
}

}  // namespace fairadj
