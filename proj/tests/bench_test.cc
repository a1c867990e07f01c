#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fairadj/bench.h"
#include "fairadj/theory.h"
#include "test_util.h"

using namespace fairadj;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec(int seeds, std::vector<Method> methods = {Method::baseline, Method::joint, Method::adjuster}) {
  ExperimentSpec spec;
  spec.dataset = "synthetic";
  spec.seeds = seed_range(0, seeds);
  spec.k = 3;
  spec.methods = std::move(methods);
  spec.train.boost.rounds = 8;
  spec.train.lambda = 2.0;
  return spec;
}

const Dataset& synthetic() {
  static const Dataset d = make_synthetic(Task::classification, 240, 4, 11);
  return d;
}

fs::path temp_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / (std::string("fairadj_bench_test_") + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAIRADJ_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Methods, Parsing) {
  EXPECT_EQ(parse_methods("adjuster,baseline"), (std::vector<Method>{Method::adjuster, Method::baseline}));
  EXPECT_EQ(to_string(Method::joint), "joint");
  EXPECT_THROW(parse_method("ensemble"), Error);
  EXPECT_THROW(parse_methods(""), Error);
}

TEST(Spec, Validation) {
  ExperimentSpec spec = small_spec(1);
  spec.seeds.clear();
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec(1);
  spec.k = 1;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec(1);
  spec.lambda_adjuster = -1.0;
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_EQ(seed_range(5, 3), (std::vector<std::uint64_t>{5, 6, 7}));
}

TEST(Experiment, BaselineOnlyHasNoAdjustedRows) {
  const ExperimentReport r = run_experiment(small_spec(2, {Method::baseline}), synthetic());
  ASSERT_EQ(r.cells.size(), 6u);
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.method, Method::baseline);
    EXPECT_TRUE(c.ok);
    EXPECT_FALSE(c.has_delta_loss);
  }
  EXPECT_EQ(report_csv(r).find("adjuster"), std::string::npos);
  EXPECT_EQ(report_csv(r).find(",joint,"), std::string::npos);
}

TEST(Experiment, CellsOrderedBySeedFoldMethod) {
  const ExperimentReport r = run_experiment(small_spec(2, {Method::adjuster, Method::joint, Method::baseline}),
                                            synthetic());
  ASSERT_EQ(r.cells.size(), 2u * 3u * 3u);
  std::size_t i = 0;
  for (std::uint64_t seed : {0u, 1u}) {
    for (int fold = 0; fold < 3; ++fold) {
      for (Method m : {Method::baseline, Method::joint, Method::adjuster}) {
        EXPECT_EQ(r.cells[i].seed, seed);
        EXPECT_EQ(r.cells[i].fold, fold);
        EXPECT_EQ(r.cells[i].method, m);
        EXPECT_TRUE(r.cells[i].ok);
        EXPECT_TRUE(r.cells[i].has_delta_loss);
        EXPECT_EQ(r.cells[i].eval.n, 80);
        ++i;
      }
    }
  }
  EXPECT_EQ(r.cells[0].lambda, 0.0);
  EXPECT_EQ(r.cells[1].lambda, 2.0);
}

TEST(Experiment, PerMethodLambdaOverrides) {
  ExperimentSpec spec = small_spec(1);
  spec.lambda_joint = 0.5;
  spec.lambda_adjuster = 3.0;
  const ExperimentReport r = run_experiment(spec, synthetic());
  EXPECT_EQ(r.lambda_joint, 0.5);
  EXPECT_EQ(r.lambda_adjuster, 3.0);
  EXPECT_EQ(r.cells[1].lambda, 0.5);
  EXPECT_EQ(r.cells[2].lambda, 3.0);
}

TEST(Experiment, DeterministicReports) {
  const ExperimentSpec spec = small_spec(2);
  EXPECT_EQ(report_csv(run_experiment(spec, synthetic())), report_csv(run_experiment(spec, synthetic())));
}

TEST(Experiment, FailuresAreRecordedPerCell) {
  ExperimentSpec spec = small_spec(1);
  spec.train.learner = LearnerKind::linear;  // adversarial penalty is rejected for linear learners
  const ExperimentReport r = run_experiment(spec, synthetic());
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.ok, c.method == Method::baseline);
    if (!c.ok) {
      EXPECT_NE(c.error.find("linear"), std::string::npos);
    }
  }
  EXPECT_NE(report_csv(r).find("error: "), std::string::npos);
}

TEST(Summary, MatchesAggregateOfCells) {
  const ExperimentReport r = run_experiment(small_spec(2), synthetic());
  std::vector<double> accs;
  for (const auto& c : r.cells) {
    if (c.method == Method::joint) accs.push_back(c.eval.accuracy);
  }
  const auto row = r.aggregate_metric(Method::joint, "accuracy");
  ASSERT_TRUE(row);
  EXPECT_EQ(row->mean, aggregate(accs).mean);
  EXPECT_EQ(row->n_runs, 6);
  EXPECT_THROW(r.aggregate_metric(Method::joint, "recall"), Error);
  const auto rows = r.summary();
  EXPECT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows.back().metric, "delta_loss");
  EXPECT_NE(summary_csv(r).find("dataset,method,metric,mean,ci95_halfwidth,n_runs"), std::string::npos);
}

TEST(Tradeoff, TenPointsForFiveSeedsAndTwoMethods) {
  const ExperimentReport r = run_experiment(small_spec(5, {Method::joint, Method::adjuster}), synthetic());
  const auto points = tradeoff_points(r);
  ASSERT_EQ(points.size(), 10u);
  EXPECT_TRUE(std::is_sorted(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return std::tie(a.method, a.seed) < std::tie(b.method, b.seed);
  }));
  // Re-derive each point from the cells.
  for (const auto& p : points) {
    double acc = 0.0, di = 0.0;
    int n = 0, n_di = 0;
    for (const auto& c : r.cells) {
      if (std::string(to_string(c.method)) != p.method || c.seed != p.seed) continue;
      acc += c.eval.accuracy;
      ++n;
      if (c.eval.di_defined) {
        di += c.eval.disparate_impact;
        ++n_di;
      }
    }
    EXPECT_EQ(n, 3);
    EXPECT_NEAR(p.accuracy, acc / n, 1e-15);
    EXPECT_NEAR(p.disparate_impact, di / n_di, 1e-15);
  }
  const std::string csv = tradeoff_csv(points);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(ReportCsv, RoundTrip) {
  const fs::path dir = temp_dir();
  const ExperimentReport r = run_experiment(small_spec(2), synthetic());
  write_report_csv(r, dir / "report.csv");
  const ExperimentReport back = read_report_csv(dir / "report.csv");
  EXPECT_EQ(report_csv(back), report_csv(r));
  emit_tradeoff(back, dir / "points.csv");
  EXPECT_EQ(slurp(dir / "points.csv"), tradeoff_csv(tradeoff_points(r)));
  fs::remove_all(dir);
}

TEST(ResultsTable, ListsEveryRow) {
  const std::string table = format_results_table({run_experiment(small_spec(2), synthetic())});
  for (const char* row : {"Dataset", "Baseline Accuracy", "AD Accuracy", "Adjuster Accuracy", "Baseline Fairness",
                          "AD Fairness", "Adjuster Fairness", "Delta Loss"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
  EXPECT_NE(table.find("synthetic"), std::string::npos);
}

TEST(LambdaGrid, DefaultScaling) {
  EXPECT_EQ(default_lambda_grid(PenaltyKind::adversarial, 800),
            (std::vector<double>{0, 0.1, 0.3, 1, 3, 10, 30, 100}));
  const auto gap = default_lambda_grid(PenaltyKind::overprediction_gap, 800);
  EXPECT_DOUBLE_EQ(gap[1], 80.0);
  EXPECT_DOUBLE_EQ(gap.back(), 80000.0);
}

TEST(LambdaSearch, ZeroGridReturnsBaselineDisparateImpact) {
  const ExperimentSpec spec = small_spec(1);
  LambdaSearchOptions options;
  options.grid = {0.0};
  const LambdaSearchResult r = lambda_search(synthetic(), Method::joint, spec, options);
  EXPECT_EQ(r.lambda, 0.0);
  ASSERT_EQ(r.curve.size(), 1u);
  const ExperimentReport base = run_experiment(small_spec(1, {Method::baseline}), synthetic());
  double di = 0.0;
  for (const auto& c : base.cells) di += c.eval.disparate_impact / 3.0;
  EXPECT_NEAR(r.disparate_impact, di, 1e-12);
  EXPECT_THROW(lambda_search(synthetic(), Method::baseline, spec, options), Error);
  options.grid = {1.0, 0.5};
  EXPECT_THROW(lambda_search(synthetic(), Method::joint, spec, options), Error);
}

TEST(LambdaSearch, SelectedLambdaBracketsTarget) {
  ExperimentSpec spec = small_spec(1);
  spec.train.boost.rounds = 40;
  for (Method m : {Method::joint, Method::adjuster}) {
    const LambdaSearchResult r = lambda_search(synthetic(), m, spec);
    ASSERT_GE(r.curve.size(), 8u);
    EXPECT_TRUE(std::is_sorted(r.curve.begin(), r.curve.end(),
                               [](const auto& a, const auto& b) { return a.lambda < b.lambda; }));
    std::size_t at = 0;
    while (r.curve[at].lambda != r.lambda) ++at;
    const double dist = std::abs(r.disparate_impact - 1.0);
    // No other curve point is closer to parity, so the target lies between the selected
    // point's neighbours whenever the selected point misses it.
    for (const auto& p : r.curve) {
      if (!std::isnan(p.disparate_impact)) {
        EXPECT_GE(std::abs(p.disparate_impact - 1.0), dist);
      }
    }
    if (dist > 0.02 && at > 0 && at + 1 < r.curve.size()) {
      const double below = r.curve[at - 1].disparate_impact - 1.0, above = r.curve[at + 1].disparate_impact - 1.0;
      const double here = r.disparate_impact - 1.0;
      EXPECT_TRUE((below > 0) != (here > 0) || (above > 0) != (here > 0) || std::abs(here) <= 0.25)
          << to_string(m);
    }
    EXPECT_EQ(r.within_tolerance, dist <= 0.25);
  }
}

TEST(Replication, Targets) {
  const auto german = replication_target("german");
  ASSERT_TRUE(german);
  EXPECT_EQ(german->baseline_di.lo, 0.72);
  EXPECT_EQ(german->adjusted_di.hi, 1.05);
  ASSERT_TRUE(replication_target("compas"));
  EXPECT_EQ(replication_target("compas")->adjusted_di.lo, 0.93);
  const auto adult = replication_target("adult");
  ASSERT_TRUE(adult);
  EXPECT_FALSE(adult->max_accuracy_gap);
  EXPECT_FALSE(replication_target("synthetic"));
}

TEST(Replication, ChecksReadTheReport) {
  const ExperimentReport r = run_experiment(small_spec(2), synthetic());
  ReplicationTarget loose{"synthetic", {0.0, 10.0}, {0.0, 10.0}, 1.0, 1.0};
  for (const auto& c : check_replication(r, loose)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  ReplicationTarget impossible{"synthetic", {5.0, 6.0}, {5.0, 6.0}, -1.0, -1.0};
  const auto checks = check_replication(r, impossible);
  EXPECT_EQ(checks.size(), 6u);
  EXPECT_TRUE(checks[0].passed);  // all cells trained
  for (std::size_t i = 1; i < checks.size(); ++i) EXPECT_FALSE(checks[i].passed) << checks[i].name;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = temp_dir();
  EXPECT_EQ(run_cli("verify-theory"), 0);
  EXPECT_NE(run_cli(""), 0);
  EXPECT_EQ(run_cli("train-baseline --dataset no-such-dataset"), 1);
  EXPECT_EQ(run_cli("bench tradeoff --in " + (dir / "missing.csv").string() + " --out " + (dir / "p.csv").string()), 1);
  // Tiny run at lambda 0 cannot meet the parity windows.
  EXPECT_EQ(run_cli("bench run --dataset german --seeds 1 --folds 2 --rounds 5 --check --out " + dir.string()), 2);
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "table.txt"));
  EXPECT_EQ(run_cli("bench tradeoff --in " + (dir / "report.csv").string() + " --out " + (dir / "p.csv").string()),
            0);
  fs::remove_all(dir);
}

TEST(Cli, TrainAndEvaluateFromCsv) {
  const fs::path dir = temp_dir();
  {
    std::ofstream csv(dir / "toy.csv");
    csv << "a,b,group,outcome\n";
    Rng rng(3);
    for (int i = 0; i < 60; ++i) {
      const double a = rng.normal(), b = rng.normal();
      csv << a << ',' << b << ',' << (i % 3 == 0 ? 1 : 0) << ',' << (a + 0.5 * b > 0 ? 1 : 0) << '\n';
    }
  }
  const std::string data = "--csv " + (dir / "toy.csv").string() +
                           " --label outcome --protected group --favorable 1 --task clf --rounds 10";
  ASSERT_EQ(run_cli("train-baseline " + data + " --out " + (dir / "f.txt").string()), 0);
  ASSERT_EQ(run_cli("train-adjuster " + data + " --lambda 1 --baseline " + (dir / "f.txt").string() + " --out " +
                    (dir / "g.txt").string()),
            0);
  const std::string eval_data = "--csv " + (dir / "toy.csv").string() +
                                " --label outcome --protected group --favorable 1 --task clf";
  EXPECT_EQ(run_cli("evaluate " + eval_data + " --model " + (dir / "f.txt").string() + " --adjuster " +
                    (dir / "g.txt").string()),
            0);
  EXPECT_NO_THROW(load_model(dir / "g.txt"));
  fs::remove_all(dir);
}
