#include "fairadj/boosting.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairadj {

GradHessBatch floor_hessian(GradHessBatch batch, double floor) {
  for (Index i = 0; i < batch.hess.size(); ++i) batch.hess[i] = std::max(batch.hess[i], floor);
  return batch;
}

BoostParams BoostParams::stretched(int factor) const {
  if (factor < 1) throw Error("stretch factor must be at least 1");
  BoostParams out = *this;
  out.rounds = rounds * factor;
  out.learning_rate = learning_rate / factor;
  return out;
}

double RegressionTree::leaf_value(const Matrix& features, Index row) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = features(row, n.feature) < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

FeatureIndex::FeatureIndex(const Matrix& features) : rows_(features.rows()) {
  columns_.resize(static_cast<std::size_t>(features.cols()));
  for (Index j = 0; j < features.cols(); ++j) {
    Column& col = columns_[static_cast<std::size_t>(j)];
    for (Index r = 0; r < rows_; ++r) {
      const double v = features(r, j);
      if (v < 0.0) col.negative.push_back(r);
      else if (v > 0.0) col.positive.push_back(r);
    }
    auto by_value = [&](Index a, Index b) {
      const double va = features(a, j), vb = features(b, j);
      return va < vb || (va == vb && a < b);
    };
    std::sort(col.negative.begin(), col.negative.end(), by_value);
    std::sort(col.positive.begin(), col.positive.end(), by_value);
  }
}

namespace {

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double split_point(double below, double above) {
  const double mid = below + (above - below) / 2.0;
  return mid > below ? mid : above;
}

}  // namespace

RegressionTree grow_tree(const Matrix& features, const FeatureIndex& index, const GradHessBatch& batch,
                         const BoostParams& params) {
  const Index n = features.rows();
  const double l2 = params.l2_reg;
  const double mcw = params.min_child_weight;
  auto weight = [l2](double g, double h) { return -g / (h + l2); };
  auto score = [l2](double g, double h) { return g * g / (h + l2); };

  RegressionTree tree;
  double g_root = 0.0, h_root = 0.0;
  for (Index r = 0; r < n; ++r) {
    g_root += batch.grad[r];
    h_root += batch.hess[r];
  }
  TreeNode root;
  root.value = weight(g_root, h_root);
  tree.nodes.push_back(root);

  std::vector<int> node_of(static_cast<std::size_t>(n), 0);
  std::vector<int> level{0};
  std::vector<double> node_g{g_root}, node_h{h_root};  // indexed by node id

  for (int depth = 0; depth < params.max_depth && !level.empty(); ++depth) {
    const std::size_t m = level.size();
    std::vector<int> slot_of_node(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of_node[static_cast<std::size_t>(level[s])] = static_cast<int>(s);
    std::vector<int> slot(static_cast<std::size_t>(n));
    std::vector<double> total_g(m, 0.0), total_h(m, 0.0);
    std::vector<Index> total_c(m, 0);
    for (Index r = 0; r < n; ++r) {
      const int s = slot_of_node[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
      slot[static_cast<std::size_t>(r)] = s;
      if (s < 0) continue;
      total_g[static_cast<std::size_t>(s)] += batch.grad[r];
      total_h[static_cast<std::size_t>(s)] += batch.hess[r];
      ++total_c[static_cast<std::size_t>(s)];
    }

    std::vector<SplitChoice> best(m);
    std::vector<double> left_g(m), left_h(m), pos_g(m), pos_h(m), last(m);
    std::vector<Index> neg_c(m), pos_c(m);
    std::vector<char> seen(m);

    for (Index j = 0; j < features.cols(); ++j) {
      const auto& col = index.column(j);
      std::fill(left_g.begin(), left_g.end(), 0.0);
      std::fill(left_h.begin(), left_h.end(), 0.0);
      std::fill(pos_g.begin(), pos_g.end(), 0.0);
      std::fill(pos_h.begin(), pos_h.end(), 0.0);
      std::fill(neg_c.begin(), neg_c.end(), 0);
      std::fill(pos_c.begin(), pos_c.end(), 0);
      std::fill(seen.begin(), seen.end(), 0);

      for (Index r : col.positive) {
        const int s = slot[static_cast<std::size_t>(r)];
        if (s < 0) continue;
        pos_g[static_cast<std::size_t>(s)] += batch.grad[r];
        pos_h[static_cast<std::size_t>(s)] += batch.hess[r];
        ++pos_c[static_cast<std::size_t>(s)];
      }

      auto consider = [&](std::size_t s, double below, double above) {
        const double gl = left_g[s], hl = left_h[s];
        const double gr = total_g[s] - gl, hr = total_h[s] - hl;
        if (hl < mcw || hr < mcw) return;
        const double gain = score(gl, hl) + score(gr, hr) - score(total_g[s], total_h[s]);
        if (gain > best[s].gain) best[s] = {gain, static_cast<int>(j), split_point(below, above)};
      };
      auto visit = [&](Index r) {
        const int si = slot[static_cast<std::size_t>(r)];
        if (si < 0) return;
        const auto s = static_cast<std::size_t>(si);
        const double v = features(r, j);
        if (seen[s] && v != last[s]) consider(s, last[s], v);
        left_g[s] += batch.grad[r];
        left_h[s] += batch.hess[r];
        last[s] = v;
        seen[s] = 1;
      };

      for (Index r : col.negative) {
        visit(r);
        const int s = slot[static_cast<std::size_t>(r)];
        if (s >= 0) ++neg_c[static_cast<std::size_t>(s)];
      }
      // Implicit zero block: everything in the node that is neither negative nor positive.
      for (std::size_t s = 0; s < m; ++s) {
        if (total_c[s] - neg_c[s] - pos_c[s] == 0) continue;
        if (seen[s]) consider(s, last[s], 0.0);
        left_g[s] = total_g[s] - pos_g[s];
        left_h[s] = total_h[s] - pos_h[s];
        last[s] = 0.0;
        seen[s] = 1;
      }
      for (Index r : col.positive) visit(r);
    }

    std::vector<int> next_level;
    std::vector<int> left_of(m, -1);
    for (std::size_t s = 0; s < m; ++s) {
      if (best[s].feature < 0) continue;
      const int id = level[s];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[static_cast<std::size_t>(id)];
      parent.feature = best[s].feature;
      parent.threshold = best[s].threshold;
      parent.left = left;
      parent.right = left + 1;
      left_of[s] = left;
      next_level.push_back(left);
      next_level.push_back(left + 1);
    }
    if (next_level.empty()) break;

    node_g.resize(tree.nodes.size(), 0.0);
    node_h.resize(tree.nodes.size(), 0.0);
    for (Index r = 0; r < n; ++r) {
      const int s = slot[static_cast<std::size_t>(r)];
      if (s < 0 || left_of[static_cast<std::size_t>(s)] < 0) continue;
      const SplitChoice& c = best[static_cast<std::size_t>(s)];
      const int child = features(r, c.feature) < c.threshold ? left_of[static_cast<std::size_t>(s)]
                                                               : left_of[static_cast<std::size_t>(s)] + 1;
      node_of[static_cast<std::size_t>(r)] = child;
      node_g[static_cast<std::size_t>(child)] += batch.grad[r];
      node_h[static_cast<std::size_t>(child)] += batch.hess[r];
    }
    for (int id : next_level) {
      tree.nodes[static_cast<std::size_t>(id)].value =
          weight(node_g[static_cast<std::size_t>(id)], node_h[static_cast<std::size_t>(id)]);
    }
    level = std::move(next_level);
  }
  return tree;
}

BoostFit boost_fit(const Matrix& features, const FeatureIndex& index, const GradientFn& gradients,
                   const BoostParams& params, Task task, const RoundHook& hook) {
  const Index n = features.rows();
  if (n == 0) throw Error("boost_fit: empty training set");
  if (params.rounds < 1) throw Error("boost_fit: rounds must be at least 1");
  if (params.max_depth < 0) throw Error("boost_fit: max_depth must be non-negative");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw Error("boost_fit: learning_rate must lie in (0, 1]");
  }
  if (index.rows() != n || index.cols() != features.cols()) {
    throw Error("boost_fit: feature index does not match the feature matrix");
  }

  BoostFit fit;
  fit.model.base_score = params.base_score;
  fit.model.learning_rate = params.learning_rate;
  fit.model.params = params;
  fit.model.n_features = features.cols();
  fit.model.task = task;
  fit.train_scores = Vector::Constant(n, params.base_score);

  for (int round = 0; round < params.rounds; ++round) {
    GradHessBatch batch = gradients(fit.train_scores, round);
    if (batch.grad.size() != n || batch.hess.size() != n) {
      throw Error("boost_fit: gradient callback returned wrong length at round " + std::to_string(round));
    }
    if (!batch.grad.allFinite() || !batch.hess.allFinite()) {
      throw Error("boost_fit: non-finite gradient or hessian at round " + std::to_string(round));
    }
    batch = floor_hessian(std::move(batch));
    RegressionTree tree = grow_tree(features, index, batch, params);
    for (Index r = 0; r < n; ++r) {
      fit.train_scores[r] += params.learning_rate * tree.leaf_value(features, r);
    }
    fit.model.trees.push_back(std::move(tree));
    if (hook) hook(fit.train_scores, round);
  }
  return fit;
}

BoostFit boost_fit(const Matrix& features, const GradientFn& gradients, const BoostParams& params, Task task,
                   const RoundHook& hook) {
  const FeatureIndex index(features);
  return boost_fit(features, index, gradients, params, task, hook);
}

ScoreVector predict(const BoostedTreesModel& model, const Matrix& features) {
  if (features.cols() != model.n_features) {
    throw Error("predict: model expects " + std::to_string(model.n_features) + " features, got " +
                std::to_string(features.cols()));
  }
  ScoreVector out;
  out.scale = model.task == Task::classification ? ScoreScale::logit : ScoreScale::raw;
  out.values = Vector::Constant(features.rows(), model.base_score);
  for (const auto& tree : model.trees) {
    for (Index r = 0; r < features.rows(); ++r) {
      out.values[r] += model.learning_rate * tree.leaf_value(features, r);
    }
  }
  return out;
}

}  // namespace fairadj
