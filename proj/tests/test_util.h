#pragma once

#include <cmath>
#include <functional>

#include "fairadj/common.h"
#include "fairadj/data.h"
#include "fairadj/random.h"

namespace fairadj::testkit {

inline Vector random_normal(Rng& rng, Index n, double scale = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Vector random_bits(Rng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<double>(rng.below(2));
  return v;
}

// Both groups non-empty.
inline Vector random_groups(Rng& rng, Index n) {
  Vector v = random_bits(rng, n);
  v[0] = 1.0;
  v[1] = 0.0;
  return v;
}

inline Vector random_uniform(Rng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform();
  return v;
}

// Central differences of a scalar function, one coordinate at a time.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& fn, const Vector& at, double h = 1e-5) {
  Vector grad(at.size());
  Vector x = at;
  for (Index i = 0; i < at.size(); ++i) {
    x[i] = at[i] + h;
    const double up = fn(x);
    x[i] = at[i] - h;
    const double down = fn(x);
    x[i] = at[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Central differences of the i-th gradient entry along coordinate i.
inline Vector numeric_diagonal(const std::function<Vector(const Vector&)>& grad_fn, const Vector& at,
                               double h = 1e-5) {
  Vector diag(at.size());
  Vector x = at;
  for (Index i = 0; i < at.size(); ++i) {
    x[i] = at[i] + h;
    const double up = grad_fn(x)[i];
    x[i] = at[i] - h;
    const double down = grad_fn(x)[i];
    x[i] = at[i];
    diag[i] = (up - down) / (2.0 * h);
  }
  return diag;
}

// max_i |a_i - b_i| / max(1, max_i |b_i|)
inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Dataset make_dataset(Matrix x, Vector y, Vector p, Task task = Task::classification) {
  Dataset d;
  d.features = std::move(x);
  d.labels = std::move(y);
  d.protected_attr = std::move(p);
  d.task = task;
  for (Index j = 0; j < d.features.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

}  // namespace fairadj::testkit
