#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairadj/data.h"
#include "fairadj/metrics.h"
#include "fairadj/train.h"

namespace fairadj {

enum class Method { baseline, joint, adjuster };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
// Comma separated list, e.g. "baseline,joint,adjuster". Throws when empty.
std::vector<Method> parse_methods(std::string_view list);

struct ExperimentSpec {
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  int k = 5;
  std::vector<Method> methods{Method::baseline, Method::joint, Method::adjuster};
  // Learner and penalty settings shared by all three methods. train.lambda is
  // the default strength; the per-method values below override it.
  TrainConfig train;
  std::optional<double> lambda_joint;
  std::optional<double> lambda_adjuster;

  double joint_lambda() const { return lambda_joint.value_or(train.lambda); }
  double adjuster_lambda() const { return lambda_adjuster.value_or(train.lambda); }
  void validate() const;
};

// Seeds base, base+1, ..., base+count-1.
std::vector<std::uint64_t> seed_range(std::uint64_t base, int count);

struct CellResult {
  std::uint64_t seed = 0;
  int fold = 0;
  Method method = Method::baseline;
  double lambda = 0.0;
  bool ok = true;
  std::string error;
  EvalResult eval;
  // Held-out (1/n)(s(f)-y)^T(g-(h-f)); NaN unless all three models were fit.
  double delta_loss = 0.0;
  bool has_delta_loss = false;
};

struct SummaryRow {
  std::string method;
  std::string metric;
  AggregateRow row;
  bool defined = false;  // fewer than two values leaves the row undefined
};

struct ExperimentReport {
  std::string dataset;
  std::vector<Method> methods;
  double lambda_joint = 0.0;
  double lambda_adjuster = 0.0;
  // Ordered by (seed position, fold, method).
  std::vector<CellResult> cells;

  std::vector<SummaryRow> summary() const;
  std::optional<AggregateRow> aggregate_metric(Method method, const std::string& metric) const;
  std::optional<AggregateRow> aggregate_delta_loss() const;
};

// For each (seed, fold): fit the baseline, the jointly debiased model and the
// adjuster on the training folds, then evaluate each on the held-out fold.
// Failures are recorded per cell; they do not abort the run.
ExperimentReport run_experiment(const ExperimentSpec& spec, const Dataset& dataset);

struct LambdaPoint {
  double lambda = 0.0;
  double disparate_impact = 0.0;
  double accuracy = 0.0;
};

struct LambdaSearchOptions {
  double target_di = 1.0;
  std::vector<double> grid;  // ascending; empty selects default_lambda_grid
  std::vector<std::uint64_t> seeds;  // empty selects the first seed of the spec
  // Bisection steps between the two grid points bracketing the target, taken
  // when no grid point lands within refine_tolerance of it.
  int refine_steps = 4;
  double refine_tolerance = 0.02;
};

struct LambdaSearchResult {
  Method method = Method::joint;
  double lambda = 0.0;
  double disparate_impact = 0.0;
  bool within_tolerance = false;  // best DI within 0.25 of the target
  std::vector<LambdaPoint> curve;  // sorted by lambda
};

// {0, 0.1, 0.3, 1, 3, 10, 30, 100} times 1 for the adversarial penalty and
// times the training-fold size for the gap penalties (which are group means,
// while task losses are sums).
std::vector<double> default_lambda_grid(PenaltyKind kind, Index train_rows);

LambdaSearchResult lambda_search(const Dataset& dataset, Method method, const ExperimentSpec& spec,
                                 const LambdaSearchOptions& options = {});

struct TradeoffPoint {
  std::string method;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double disparate_impact = 0.0;
};

// One point per (method, seed): fold-averaged accuracy and DI, sorted by
// (method, seed). Folds with undefined DI are skipped for the DI mean.
std::vector<TradeoffPoint> tradeoff_points(const ExperimentReport& report);

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport read_report_csv(const std::filesystem::path& path);
void write_summary_csv(const ExperimentReport& report, const std::filesystem::path& path);
void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path);
void write_lambda_curve_csv(const std::vector<LambdaSearchResult>& searches, const std::filesystem::path& path);
void emit_tradeoff(const ExperimentReport& report, const std::filesystem::path& path);

std::string report_csv(const ExperimentReport& report);
std::string summary_csv(const ExperimentReport& report);
std::string tradeoff_csv(const std::vector<TradeoffPoint>& points);

// Aligned text table with one column per report: baseline / AD / adjuster
// accuracy, the same three fairness (DI) rows, then delta loss.
std::string format_results_table(const std::vector<ExperimentReport>& reports);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Replication thresholds for the bundled datasets.
struct ReplicationTarget {
  std::string dataset;
  Range baseline_di;
  Range adjusted_di;
  std::optional<double> max_accuracy_gap;
  std::optional<double> max_abs_delta_loss;
};

std::optional<ReplicationTarget> replication_target(const std::string& dataset);

struct CriterionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CriterionCheck> check_replication(const ExperimentReport& report, const ReplicationTarget& target);

}  // namespace fairadj
