#pragma once

#include <functional>
#include <vector>

#include "fairadj/common.h"
#include "fairadj/loss.h"

namespace fairadj {

inline constexpr double kHessianFloor = 1e-6;

// Per-example first and second derivatives driving one boosting round.
struct GradHessBatch {
  Vector grad;
  Vector hess;
};

// hess_i <- max(hess_i, floor)
GradHessBatch floor_hessian(GradHessBatch batch, double floor = kHessianFloor);

struct BoostParams {
  int max_depth = 3;
  double learning_rate = 0.1;
  int rounds = 200;
  double min_child_weight = 1.0;
  double l2_reg = 1.0;
  double base_score = 0.0;

  // rounds * factor trees at learning_rate / factor.
  BoostParams stretched(int factor) const;
};

// Internal nodes route x[feature] < threshold to the left child.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf weight -G/(H + l2); kept on internal nodes too

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double leaf_value(const Matrix& features, Index row) const;
};

// score(x) = base_score + learning_rate * sum_t tree_t(x)
struct BoostedTreesModel {
  std::vector<RegressionTree> trees;
  double base_score = 0.0;
  double learning_rate = 0.1;
  BoostParams params;
  Index n_features = 0;
  Task task = Task::regression;
};

// Column-wise sort order of a feature matrix. Zero entries are kept implicit
// so the split search costs O(nonzeros) per feature and level.
class FeatureIndex {
 public:
  explicit FeatureIndex(const Matrix& features);

  struct Column {
    std::vector<Index> negative;  // rows with x < 0, ascending by (x, row)
    std::vector<Index> positive;  // rows with x > 0, ascending by (x, row)
  };

  const Column& column(Index j) const { return columns_[static_cast<std::size_t>(j)]; }
  Index rows() const { return rows_; }
  Index cols() const { return static_cast<Index>(columns_.size()); }

 private:
  Index rows_ = 0;
  std::vector<Column> columns_;
};

// Produces derivatives at the current training scores before each round.
using GradientFn = std::function<GradHessBatch(const Vector& scores, int round)>;
// Invoked after each tree has been appended, with the updated scores.
using RoundHook = std::function<void(const Vector& scores, int round)>;

struct BoostFit {
  BoostedTreesModel model;
  Vector train_scores;
};

// Second-order boosting with exact greedy depth-wise tree growth.
//
// Split gain is G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2); a split is taken
// only when its gain is positive and both children reach min_child_weight.
// Equal gains go to the lowest feature index, then the lowest threshold.
BoostFit boost_fit(const Matrix& features, const FeatureIndex& index, const GradientFn& gradients,
                   const BoostParams& params, Task task = Task::regression, const RoundHook& hook = {});
BoostFit boost_fit(const Matrix& features, const GradientFn& gradients, const BoostParams& params,
                   Task task = Task::regression, const RoundHook& hook = {});

// Grows a single tree on fixed derivatives.
RegressionTree grow_tree(const Matrix& features, const FeatureIndex& index, const GradHessBatch& batch,
                         const BoostParams& params);

ScoreVector predict(const BoostedTreesModel& model, const Matrix& features);

}  // namespace fairadj
