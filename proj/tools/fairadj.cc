// fairadj: train baseline / jointly debiased / adjuster models, run the
// cross-validated benchmark and the numerical theory checks.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "fairadj/bench.h"
#include "fairadj/metrics.h"
#include "fairadj/model.h"
#include "fairadj/theory.h"
#include "fairadj/train.h"

namespace fa = fairadj;

namespace {

constexpr int kExitError = 1;
constexpr int kExitThreshold = 2;

struct DataFlags {
  std::string dataset;
  std::string manifest;
  std::string csv;
  std::string label;
  std::string protected_column;
  int favorable = 1;
  std::string task = "clf";
  std::vector<std::string> categorical;
  bool protected_feature = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset, "Dataset name from the manifest");
    cmd->add_option("--manifest", manifest, "Manifest file (default: <data dir>/datasets.ini)");
    cmd->add_option("--csv", csv, "Load a CSV file directly instead of a manifest entry");
    cmd->add_option("--label", label, "Label column (with --csv)");
    cmd->add_option("--protected", protected_column, "Protected attribute column (with --csv)");
    cmd->add_option("--favorable", favorable, "Favorable label value (with --csv)")->check(CLI::IsMember({0, 1}));
    cmd->add_option("--task", task, "reg or clf (with --csv)")->check(CLI::IsMember({"reg", "clf"}));
    cmd->add_option("--categorical", categorical, "Categorical columns (with --csv)")->delimiter(',');
    cmd->add_flag("--protected-feature", protected_feature, "Keep the protected column as a feature (with --csv)");
  }

  std::string name() const { return dataset.empty() ? std::filesystem::path(csv).stem().string() : dataset; }

  fa::Dataset load() const {
    if (!csv.empty()) {
      if (label.empty() || protected_column.empty()) throw fa::Error("--csv needs --label and --protected");
      fa::ColumnSchema schema;
      schema.label = label;
      schema.protected_column = protected_column;
      schema.favorable_label = favorable;
      schema.task = fa::parse_task(task);
      schema.categorical = categorical;
      schema.protected_as_feature = protected_feature;
      return fa::load_csv(csv, schema);
    }
    if (dataset.empty()) throw fa::Error("either --dataset or --csv is required");
    const auto file = manifest.empty() ? fa::default_data_dir() / "datasets.ini" : std::filesystem::path(manifest);
    return fa::Manifest::load(file).load_dataset(dataset);
  }
};

struct LearnerFlags {
  std::string learner = "boosted";
  fa::BoostParams boost;
  int stretch = 1;
  double lambda = 0.0;
  std::string penalty = "adversarial";
  double adv_step = 0.1;
  int adv_steps = 5;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd, bool with_lambda) {
    cmd->add_option("--learner", learner, "boosted or linear")->check(CLI::IsMember({"boosted", "linear"}));
    cmd->add_option("--max-depth", boost.max_depth, "Tree depth")->check(CLI::PositiveNumber);
    cmd->add_option("--learning-rate", boost.learning_rate, "Shrinkage per tree")->check(CLI::PositiveNumber);
    cmd->add_option("--rounds", boost.rounds, "Boosting rounds")->check(CLI::PositiveNumber);
    cmd->add_option("--l2-reg", boost.l2_reg, "Leaf weight L2 regularization")->check(CLI::NonNegativeNumber);
    cmd->add_option("--min-child-weight", boost.min_child_weight, "Minimum hessian sum per child")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--stretch", stretch, "Multiply rounds by N and divide the learning rate by N")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed recorded with the run");
    if (with_lambda) {
      cmd->add_option("--lambda", lambda, "Fairness penalty strength")->check(CLI::NonNegativeNumber);
      cmd->add_option("--penalty", penalty, "adversarial, gap or gap-squared")
          ->check(CLI::IsMember({"adversarial", "gap", "gap-squared"}));
      cmd->add_option("--adv-step", adv_step, "Adversary gradient step size")->check(CLI::PositiveNumber);
      cmd->add_option("--adv-steps", adv_steps, "Adversary steps per boosting round")
          ->check(CLI::NonNegativeNumber);
    }
  }

  fa::TrainConfig config(fa::Task task) const {
    fa::TrainConfig cfg;
    cfg.task = task;
    cfg.learner = fa::parse_learner(learner);
    cfg.boost = boost.stretched(stretch);
    cfg.lambda = lambda;
    cfg.penalty = fa::parse_penalty(penalty);
    cfg.adv_step_size = adv_step;
    cfg.adv_steps_per_round = adv_steps;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

void print_eval(const std::string& label, const fa::Vector& scores, const fa::Dataset& data) {
  if (data.task != fa::Task::classification) {
    const double mse = (scores - data.labels).squaredNorm() / static_cast<double>(data.rows());
    std::printf("%s: mse %.6f\n", label.c_str(), mse);
    return;
  }
  const fa::EvalResult r = fa::evaluate(scores, data);
  std::printf("%s: accuracy %.4f  disparate impact %s\n", label.c_str(), r.accuracy,
              r.di_defined ? fa::format_double(r.disparate_impact).c_str() : "undefined");
}

int write_model(const fa::Model& model, const std::string& out) {
  if (out.empty()) {
    fa::save_model(model, std::cout);
  } else {
    fa::save_model(model, std::filesystem::path(out));
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
  return 0;
}

int print_checks(const std::vector<fa::CriterionCheck>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness adjustment of trained models"};
  app.require_subcommand(1);

  DataFlags data;
  LearnerFlags learn;
  std::string out;
  std::string baseline_path;

  auto* train_baseline = app.add_subcommand("train-baseline", "Fit the baseline model on a dataset");
  auto* train_joint = app.add_subcommand("train-joint", "Fit a model with the fairness penalty in its objective");
  auto* train_adjuster = app.add_subcommand("train-adjuster", "Fit an additive adjuster on top of a saved baseline");
  for (auto* cmd : {train_baseline, train_joint, train_adjuster}) {
    data.add(cmd);
    learn.add(cmd, cmd != train_baseline);
    cmd->add_option("--out", out, "Model file (default: stdout)");
  }
  train_adjuster->add_option("--baseline", baseline_path, "Saved baseline model")->required();

  std::string model_path, adjuster_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score a saved model, optionally with an adjuster");
  data.add(evaluate);
  evaluate->add_option("--model", model_path, "Saved model")->required();
  evaluate->add_option("--adjuster", adjuster_path, "Saved adjuster added to the model's scores");

  auto* bench = app.add_subcommand("bench", "Cross-validated benchmark");
  bench->require_subcommand(1);
  auto* bench_run = bench->add_subcommand("run", "Run baseline / joint / adjuster over seeds and folds");
  data.add(bench_run);
  learn.add(bench_run, true);
  int n_seeds = 5, folds = 5;
  std::uint64_t seed_base = 0;
  std::string methods = "baseline,joint,adjuster";
  std::optional<double> lambda_joint, lambda_adjuster;
  bool search = false, check = false, full = false;
  std::string out_dir = "bench-out";
  bench_run->add_option("--seeds", n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  bench_run->add_option("--seed-base", seed_base, "First seed");
  bench_run->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  bench_run->add_option("--methods", methods, "Comma separated subset of baseline,joint,adjuster");
  bench_run->add_option("--lambda-joint", lambda_joint, "Override lambda for the joint model");
  bench_run->add_option("--lambda-adjuster", lambda_adjuster, "Override lambda for the adjuster");
  bench_run->add_flag("--lambda-search", search, "Pick each method's lambda by a grid search on the first seed");
  bench_run->add_flag("--check", check, "Compare against the dataset's replication thresholds (exit 2 on failure)");
  bench_run->add_flag("--full", full, "50 seeds");
  bench_run->add_option("--out", out_dir, "Output directory");

  std::string tradeoff_in, tradeoff_out;
  auto* bench_tradeoff = bench->add_subcommand("tradeoff", "Per-seed accuracy / DI points from a report");
  bench_tradeoff->add_option("--in", tradeoff_in, "report.csv from bench run")->required();
  bench_tradeoff->add_option("--out", tradeoff_out, "Output CSV")->required();

  std::uint64_t theory_seed = 7;
  auto* verify = app.add_subcommand("verify-theory", "Numerical checks of the adjuster's identities and bounds");
  verify->add_option("--seed", theory_seed, "Seed for the synthetic instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_baseline->parsed() || train_joint->parsed()) {
      const fa::Dataset ds = data.load();
      const fa::TrainConfig cfg = learn.config(ds.task);
      const fa::TrainedModel m = train_baseline->parsed() ? fa::fit_baseline(ds, cfg) : fa::fit_joint(ds, cfg);
      print_eval("train", m.train_scores, ds);
      return write_model(m.model, out);
    }
    if (train_adjuster->parsed()) {
      const fa::Dataset ds = data.load();
      const fa::TrainConfig cfg = learn.config(ds.task);
      const fa::Model baseline = fa::load_model(std::filesystem::path(baseline_path));
      const auto adjust = cfg.penalty == fa::PenaltyKind::adversarial ? fa::AdjustData::unlabeled(ds)
                                                                      : fa::AdjustData::labeled(ds);
      const fa::TrainedModel g = fa::fit_adjuster(baseline, adjust, cfg);
      print_eval("train", fa::predict_adjusted(baseline, g.model, ds.features).values, ds);
      return write_model(g.model, out);
    }
    if (evaluate->parsed()) {
      const fa::Dataset ds = data.load();
      const fa::Model model = fa::load_model(std::filesystem::path(model_path));
      fa::Vector scores = fa::predict(model, ds.features).values;
      if (!adjuster_path.empty()) scores += fa::predict(fa::load_model(std::filesystem::path(adjuster_path)), ds.features).values;
      print_eval(data.name(), scores, ds);
      return 0;
    }
    if (bench_run->parsed()) {
      const fa::Dataset ds = data.load();
      fa::ExperimentSpec spec;
      spec.dataset = data.name();
      spec.seeds = fa::seed_range(seed_base, full ? 50 : n_seeds);
      spec.k = folds;
      spec.methods = fa::parse_methods(methods);
      spec.train = learn.config(ds.task);
      spec.lambda_joint = lambda_joint;
      spec.lambda_adjuster = lambda_adjuster;
      spec.validate();
      const std::filesystem::path dir(out_dir);
      if (search) {
        std::vector<fa::LambdaSearchResult> searches;
        for (fa::Method m : {fa::Method::joint, fa::Method::adjuster}) {
          if (std::find(spec.methods.begin(), spec.methods.end(), m) == spec.methods.end()) continue;
          const auto r = fa::lambda_search(ds, m, spec);
          std::fprintf(stderr, "lambda search %s: lambda %s, DI %.4f\n", std::string(fa::to_string(m)).c_str(),
                       fa::format_double(r.lambda).c_str(), r.disparate_impact);
          if (!r.within_tolerance) {
            std::fprintf(stderr, "warning: no lambda reached DI within 0.25 of the target; using the closest\n");
          }
          (m == fa::Method::joint ? spec.lambda_joint : spec.lambda_adjuster) = r.lambda;
          searches.push_back(r);
        }
        fa::write_lambda_curve_csv(searches, dir / "lambda_curve.csv");
      }
      const fa::ExperimentReport report = fa::run_experiment(spec, ds);
      fa::write_report_csv(report, dir / "report.csv");
      fa::write_summary_csv(report, dir / "summary.csv");
      if (report.methods.size() >= 2) fa::emit_tradeoff(report, dir / "tradeoff.csv");
      const std::string table = fa::format_results_table({report});
      std::ofstream(dir / "table.txt") << table;
      std::fputs(table.c_str(), stdout);
      for (const auto& c : report.cells) {
        if (!c.ok) {
          std::fprintf(stderr, "cell seed %llu fold %d %s failed: %s\n", static_cast<unsigned long long>(c.seed),
                       c.fold, std::string(fa::to_string(c.method)).c_str(), c.error.c_str());
        }
      }
      if (check) {
        const auto target = fa::replication_target(spec.dataset);
        if (!target) throw fa::Error("no replication thresholds for dataset '" + spec.dataset + "'");
        return print_checks(fa::check_replication(report, *target));
      }
      return 0;
    }
    if (bench_tradeoff->parsed()) {
      fa::emit_tradeoff(fa::read_report_csv(tradeoff_in), tradeoff_out);
      return 0;
    }
    if (verify->parsed()) {
      bool ok = true;
      for (const auto& row : fa::verify_theory(theory_seed)) {
        const char* status = row.passed ? "PASS" : (row.hard ? "FAIL" : "WARN");
        std::printf("%-4s %-55s %14.6e  %s\n", status, row.name.c_str(), row.value, row.detail.c_str());
        ok = ok && (row.passed || !row.hard);
      }
      return ok ? 0 : kExitThreshold;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
