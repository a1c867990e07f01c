#include "fairadj/bench.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fairadj {
namespace {

constexpr Method kMethodOrder[] = {Method::baseline, Method::joint, Method::adjuster};

bool has_method(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::vector<Method> canonical(const std::vector<Method>& methods) {
  std::vector<Method> out;
  for (Method m : kMethodOrder) {
    if (has_method(methods, m)) out.push_back(m);
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

AdjustData adjust_data_for(const TrainConfig& config, const Dataset& train) {
  // The adversarial penalty never needs labels, so the adjuster is not given any.
  return config.penalty == PenaltyKind::adversarial ? AdjustData::unlabeled(train) : AdjustData::labeled(train);
}

FeatureIndex index_for(const TrainConfig& config, const Dataset& train) {
  return config.learner == LearnerKind::boosted ? FeatureIndex(train.features)
                                                : FeatureIndex(Matrix(0, train.cols()));
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::baseline: return "baseline";
    case Method::joint: return "joint";
    case Method::adjuster: return "adjuster";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "baseline") return Method::baseline;
  if (name == "joint") return Method::joint;
  if (name == "adjuster") return Method::adjuster;
  throw Error("unknown method '" + std::string(name) + "' (expected baseline, joint or adjuster)");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    const auto item = list.substr(start, end - start);
    if (!item.empty()) out.push_back(parse_method(item));
    start = end + 1;
  }
  if (out.empty()) throw Error("no methods given (expected baseline, joint and/or adjuster)");
  return out;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw Error("experiment needs at least one seed");
  if (methods.empty()) throw Error("experiment needs at least one method");
  if (k < 2) throw Error("experiment needs at least 2 folds");
  train.validate();
  if (joint_lambda() < 0.0 || adjuster_lambda() < 0.0) throw Error("lambda must be non-negative");
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
  return out;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const Dataset& dataset) {
  spec.validate();
  dataset.validate();
  if (dataset.task != Task::classification) throw Error("run_experiment: classification datasets only");

  ExperimentReport report;
  report.dataset = spec.dataset;
  report.methods = canonical(spec.methods);
  report.lambda_joint = spec.joint_lambda();
  report.lambda_adjuster = spec.adjuster_lambda();
  const bool want_joint = has_method(report.methods, Method::joint);
  const bool want_adjuster = has_method(report.methods, Method::adjuster);
  const bool want_baseline = has_method(report.methods, Method::baseline);

  TrainConfig joint_cfg = spec.train;
  joint_cfg.lambda = spec.joint_lambda();
  TrainConfig adjuster_cfg = spec.train;
  adjuster_cfg.lambda = spec.adjuster_lambda();

  for (std::uint64_t seed : spec.seeds) {
    const FoldPlan plan = make_folds(dataset.rows(), spec.k, seed);
    for (int fold = 0; fold < spec.k; ++fold) {
      const TrainTestSplit parts = split(dataset, plan, fold);
      const FeatureIndex index = index_for(spec.train, parts.train);
      const Matrix& x_test = parts.test.features;

      std::optional<Model> f, h, g;
      std::string f_error, h_error, g_error;
      if (want_baseline || want_adjuster) {
        try {
          f = fit_baseline(parts.train, spec.train, index).model;
        } catch (const std::exception& e) {
          f_error = e.what();
        }
      }
      if (want_joint) {
        try {
          h = fit_joint(parts.train, joint_cfg, index).model;
        } catch (const std::exception& e) {
          h_error = e.what();
        }
      }
      if (want_adjuster) {
        if (!f) {
          g_error = "baseline failed: " + f_error;
        } else {
          try {
            g = fit_adjuster(*f, adjust_data_for(adjuster_cfg, parts.train), adjuster_cfg, index).model;
          } catch (const std::exception& e) {
            g_error = e.what();
          }
        }
      }

      std::optional<Vector> f_test, h_test, g_test;
      if (f) f_test = predict(*f, x_test).values;
      if (h) h_test = predict(*h, x_test).values;
      if (g) g_test = predict(*g, x_test).values;
      std::optional<double> dl;
      if (f_test && h_test && g_test) dl = delta_loss(*f_test, *h_test, *g_test, parts.test.labels);

      for (Method m : report.methods) {
        CellResult cell;
        cell.seed = seed;
        cell.fold = fold;
        cell.method = m;
        cell.lambda = m == Method::joint ? joint_cfg.lambda : m == Method::adjuster ? adjuster_cfg.lambda : 0.0;
        cell.has_delta_loss = dl.has_value();
        cell.delta_loss = dl.value_or(NAN);
        std::optional<Vector> scores;
        if (m == Method::baseline) {
          scores = f_test;
          cell.error = f_error;
        } else if (m == Method::joint) {
          scores = h_test;
          cell.error = h_error;
        } else {
          if (f_test && g_test) scores = Vector(*f_test + *g_test);
          cell.error = g_error;
        }
        cell.ok = scores.has_value();
        if (cell.ok) cell.eval = evaluate(*scores, parts.test);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::optional<AggregateRow> ExperimentReport::aggregate_metric(Method method, const std::string& metric) const {
  std::vector<double> values;
  for (const auto& c : cells) {
    if (c.method != method || !c.ok) continue;
    if (metric == "accuracy") {
      values.push_back(c.eval.accuracy);
    } else if (metric == "disparate_impact") {
      if (c.eval.di_defined) values.push_back(c.eval.disparate_impact);
    } else {
      throw Error("unknown metric '" + metric + "'");
    }
  }
  if (values.size() < 2) return std::nullopt;
  return aggregate(values);
}

std::optional<AggregateRow> ExperimentReport::aggregate_delta_loss() const {
  std::vector<double> values;
  const Method first = methods.empty() ? Method::baseline : methods.front();
  for (const auto& c : cells) {
    if (c.method == first && c.has_delta_loss) values.push_back(c.delta_loss);
  }
  if (values.size() < 2) return std::nullopt;
  return aggregate(values);
}

std::vector<SummaryRow> ExperimentReport::summary() const {
  std::vector<SummaryRow> rows;
  for (Method m : methods) {
    for (const char* metric : {"accuracy", "disparate_impact"}) {
      SummaryRow row{std::string(to_string(m)), metric, {}, false};
      if (auto agg = aggregate_metric(m, metric)) {
        row.row = *agg;
        row.defined = true;
      }
      rows.push_back(std::move(row));
    }
  }
  if (auto dl = aggregate_delta_loss()) rows.push_back({"adjuster_vs_joint", "delta_loss", *dl, true});
  return rows;
}

std::vector<double> default_lambda_grid(PenaltyKind kind, Index train_rows) {
  const double scale = kind == PenaltyKind::adversarial ? 1.0 : static_cast<double>(train_rows);
  std::vector<double> grid{0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
  for (double& v : grid) v *= scale;
  return grid;
}

LambdaSearchResult lambda_search(const Dataset& dataset, Method method, const ExperimentSpec& spec,
                                 const LambdaSearchOptions& options) {
  if (method == Method::baseline) throw Error("lambda_search: method must be joint or adjuster");
  spec.validate();
  const std::vector<std::uint64_t> seeds =
      options.seeds.empty() ? std::vector<std::uint64_t>{spec.seeds.front()} : options.seeds;

  struct FoldData {
    TrainTestSplit parts;
    FeatureIndex index;
    std::optional<Model> baseline;
  };
  std::vector<FoldData> folds;
  for (std::uint64_t seed : seeds) {
    const FoldPlan plan = make_folds(dataset.rows(), spec.k, seed);
    for (int fold = 0; fold < spec.k; ++fold) {
      TrainTestSplit parts = split(dataset, plan, fold);
      FeatureIndex index = index_for(spec.train, parts.train);
      folds.push_back(FoldData{std::move(parts), std::move(index), std::nullopt});
    }
  }
  if (method == Method::adjuster) {
    for (auto& fd : folds) fd.baseline = fit_baseline(fd.parts.train, spec.train, fd.index).model;
  }

  std::vector<double> grid = options.grid;
  if (grid.empty()) {
    const Index train_rows = dataset.rows() - dataset.rows() / spec.k;
    grid = default_lambda_grid(spec.train.penalty, train_rows);
  }
  if (!std::is_sorted(grid.begin(), grid.end())) throw Error("lambda_search: grid must be ascending");

  auto fold_scores = [&](const FoldData& fd, const TrainConfig& cfg) {
    const Matrix& x_test = fd.parts.test.features;
    if (method == Method::joint) return predict(fit_joint(fd.parts.train, cfg, fd.index).model, x_test).values;
    const Model g = fit_adjuster(*fd.baseline, adjust_data_for(cfg, fd.parts.train), cfg, fd.index).model;
    return predict_adjusted(*fd.baseline, g, x_test).values;
  };
  auto measure = [&](double lambda) {
    TrainConfig cfg = spec.train;
    cfg.lambda = lambda;
    LambdaPoint p;
    p.lambda = lambda;
    std::vector<double> dis, accs;
    for (const auto& fd : folds) {
      Vector scores;
      try {
        scores = fold_scores(fd, cfg);
      } catch (const std::exception&) {
        // Very large strengths can make training diverge; the point stays on
        // the curve as undefined instead of ending the search.
        p.accuracy = NAN;
        p.disparate_impact = NAN;
        return p;
      }
      const EvalResult eval = evaluate(scores, fd.parts.test);
      accs.push_back(eval.accuracy);
      if (eval.di_defined) dis.push_back(eval.disparate_impact);
    }
    for (double v : accs) p.accuracy += v / static_cast<double>(accs.size());
    if (dis.empty()) {
      p.disparate_impact = NAN;
    } else {
      for (double v : dis) p.disparate_impact += v / static_cast<double>(dis.size());
    }
    return p;
  };
  auto distance = [&](const LambdaPoint& p) {
    return std::isnan(p.disparate_impact) ? INFINITY : std::abs(p.disparate_impact - options.target_di);
  };

  LambdaSearchResult out;
  out.method = method;
  for (double lambda : grid) out.curve.push_back(measure(lambda));

  auto best_point = [&] {
    const LambdaPoint* best = &out.curve.front();
    for (const auto& p : out.curve) {
      if (distance(p) < distance(*best)) best = &p;
    }
    return *best;
  };

  for (int step = 0; step < options.refine_steps; ++step) {
    if (distance(best_point()) <= options.refine_tolerance) break;
    std::sort(out.curve.begin(), out.curve.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    // Closest pair of neighbours whose DI values straddle the target.
    std::optional<std::size_t> bracket;
    for (std::size_t i = 0; i + 1 < out.curve.size(); ++i) {
      const double a = out.curve[i].disparate_impact - options.target_di;
      const double b = out.curve[i + 1].disparate_impact - options.target_di;
      if (std::isnan(a) || std::isnan(b) || (a > 0) == (b > 0)) continue;
      if (!bracket || std::min(std::abs(a), std::abs(b)) <
                          std::min(distance(out.curve[*bracket]), distance(out.curve[*bracket + 1]))) {
        bracket = i;
      }
    }
    if (!bracket) break;
    const double lo = out.curve[*bracket].lambda, hi = out.curve[*bracket + 1].lambda;
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    out.curve.push_back(measure(mid));
  }
  std::sort(out.curve.begin(), out.curve.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });

  const LambdaPoint best = best_point();
  out.lambda = best.lambda;
  out.disparate_impact = best.disparate_impact;
  out.within_tolerance = distance(best) <= 0.25;
  return out;
}

std::vector<TradeoffPoint> tradeoff_points(const ExperimentReport& report) {
  struct Acc {
    double acc_sum = 0.0, di_sum = 0.0;
    int acc_n = 0, di_n = 0;
  };
  std::map<std::pair<std::string, std::uint64_t>, Acc> groups;
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    Acc& a = groups[{std::string(to_string(c.method)), c.seed}];
    a.acc_sum += c.eval.accuracy;
    ++a.acc_n;
    if (c.eval.di_defined) {
      a.di_sum += c.eval.disparate_impact;
      ++a.di_n;
    }
  }
  std::vector<TradeoffPoint> out;
  for (const auto& [key, a] : groups) {
    out.push_back({key.first, key.second, a.acc_sum / a.acc_n, a.di_n > 0 ? a.di_sum / a.di_n : NAN});
  }
  return out;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "dataset,seed,fold,method,lambda,status,n,accuracy,disparate_impact,di_defined,"
         "favorable_rate_protected,favorable_rate_unprotected,delta_loss\n";
  for (const auto& c : report.cells) {
    out << report.dataset << ',' << c.seed << ',' << c.fold << ',' << to_string(c.method) << ','
        << format_double(c.lambda) << ',' << (c.ok ? std::string("ok") : "error: " + sanitize(c.error)) << ','
        << c.eval.n << ',' << format_double(c.eval.accuracy) << ',' << format_double(c.eval.disparate_impact) << ','
        << (c.eval.di_defined ? 1 : 0) << ',' << format_double(c.eval.favorable_rate_protected) << ','
        << format_double(c.eval.favorable_rate_unprotected) << ','
        << (c.has_delta_loss ? format_double(c.delta_loss) : std::string("nan")) << '\n';
  }
  return out.str();
}

void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text(path, report_csv(report));
}

ExperimentReport read_report_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  ExperimentReport report;
  const auto col = [&](const char* name) { return table.column(name); };
  const std::size_t c_dataset = col("dataset"), c_seed = col("seed"), c_fold = col("fold"), c_method = col("method"),
                    c_lambda = col("lambda"), c_status = col("status"), c_n = col("n"), c_acc = col("accuracy"),
                    c_di = col("disparate_impact"), c_def = col("di_defined"),
                    c_fp = col("favorable_rate_protected"), c_fu = col("favorable_rate_unprotected"),
                    c_dl = col("delta_loss");
  for (const auto& row : table.rows) {
    CellResult c;
    report.dataset = row[c_dataset];
    c.seed = std::stoull(row[c_seed]);
    c.fold = std::stoi(row[c_fold]);
    c.method = parse_method(row[c_method]);
    c.lambda = parse_double(row[c_lambda]);
    c.ok = row[c_status] == "ok";
    if (!c.ok) c.error = row[c_status];
    c.eval.n = std::stol(row[c_n]);
    c.eval.accuracy = parse_double(row[c_acc]);
    c.eval.disparate_impact = parse_double(row[c_di]);
    c.eval.di_defined = row[c_def] == "1";
    c.eval.favorable_rate_protected = parse_double(row[c_fp]);
    c.eval.favorable_rate_unprotected = parse_double(row[c_fu]);
    c.has_delta_loss = row[c_dl] != "nan";
    c.delta_loss = c.has_delta_loss ? parse_double(row[c_dl]) : NAN;
    if (!has_method(report.methods, c.method)) report.methods.push_back(c.method);
    if (c.method == Method::joint) report.lambda_joint = c.lambda;
    if (c.method == Method::adjuster) report.lambda_adjuster = c.lambda;
    report.cells.push_back(std::move(c));
  }
  report.methods = canonical(report.methods);
  return report;
}

std::string summary_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "dataset,method,metric,mean,ci95_halfwidth,n_runs\n";
  for (const auto& row : report.summary()) {
    out << report.dataset << ',' << row.method << ',' << row.metric << ',';
    if (row.defined) {
      out << format_double(row.row.mean) << ',' << format_double(row.row.ci95_halfwidth) << ',' << row.row.n_runs;
    } else {
      out << "nan,nan,0";
    }
    out << '\n';
  }
  return out.str();
}

void write_summary_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text(path, summary_csv(report));
}

std::string tradeoff_csv(const std::vector<TradeoffPoint>& points) {
  std::ostringstream out;
  out << "method,seed,accuracy,disparate_impact\n";
  for (const auto& p : points) {
    out << p.method << ',' << p.seed << ',' << format_double(p.accuracy) << ','
        << (std::isnan(p.disparate_impact) ? std::string("nan") : format_double(p.disparate_impact)) << '\n';
  }
  return out.str();
}

void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path) {
  write_text(path, tradeoff_csv(points));
}

void emit_tradeoff(const ExperimentReport& report, const std::filesystem::path& path) {
  if (report.methods.size() < 2) throw Error("emit_tradeoff: report needs at least two methods");
  write_tradeoff_csv(tradeoff_points(report), path);
}

void write_lambda_curve_csv(const std::vector<LambdaSearchResult>& searches, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "method,lambda,disparate_impact,accuracy,selected\n";
  for (const auto& s : searches) {
    for (const auto& p : s.curve) {
      out << to_string(s.method) << ',' << format_double(p.lambda) << ','
          << (std::isnan(p.disparate_impact) ? std::string("nan") : format_double(p.disparate_impact)) << ','
          << (std::isnan(p.accuracy) ? std::string("nan") : format_double(p.accuracy)) << ','
          << (p.lambda == s.lambda ? 1 : 0) << '\n';
    }
  }
  write_text(path, out.str());
}

std::string format_results_table(const std::vector<ExperimentReport>& reports) {
  auto cell = [](const std::optional<AggregateRow>& row) {
    return row ? fixed(row->mean, 4) + "±" + fixed(row->ci95_halfwidth, 4) : std::string("n/a");
  };
  std::vector<std::pair<std::string, std::vector<std::string>>> lines;
  auto add = [&](const std::string& label, auto&& value_of) {
    std::vector<std::string> values;
    for (const auto& r : reports) values.push_back(value_of(r));
    lines.emplace_back(label, std::move(values));
  };
  add("Dataset", [](const ExperimentReport& r) { return r.dataset; });
  const std::pair<Method, const char*> names[] = {
      {Method::baseline, "Baseline"}, {Method::joint, "AD"}, {Method::adjuster, "Adjuster"}};
  for (const auto& [m, label] : names) {
    add(std::string(label) + " Accuracy", [&, m = m](const ExperimentReport& r) {
      return cell(r.aggregate_metric(m, "accuracy"));
    });
  }
  for (const auto& [m, label] : names) {
    add(std::string(label) + " Fairness", [&, m = m](const ExperimentReport& r) {
      return cell(r.aggregate_metric(m, "disparate_impact"));
    });
  }
  add("Delta Loss", [](const ExperimentReport& r) {
    const auto dl = r.aggregate_delta_loss();
    if (!dl) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5f", dl->mean);
    return std::string(buf);
  });
  add("Lambda AD / Adjuster", [](const ExperimentReport& r) {
    return format_double(r.lambda_joint) + " / " + format_double(r.lambda_adjuster);
  });

  // "±" is two bytes but one column wide.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::size_t label_w = 0;
  std::vector<std::size_t> col_w(reports.size(), 0);
  for (const auto& [label, values] : lines) {
    label_w = std::max(label_w, width(label));
    for (std::size_t i = 0; i < values.size(); ++i) col_w[i] = std::max(col_w[i], width(values[i]));
  }
  std::ostringstream out;
  for (const auto& [label, values] : lines) {
    out << label << std::string(label_w - width(label), ' ');
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << " | " << values[i] << std::string(col_w[i] - width(values[i]), ' ');
    }
    out << '\n';
  }
  return out.str();
}

std::optional<ReplicationTarget> replication_target(const std::string& dataset) {
  if (dataset == "german") return ReplicationTarget{"german", {0.72, 0.92}, {0.95, 1.05}, 0.01, 0.01};
  if (dataset == "compas") return ReplicationTarget{"compas", {0.60, 0.80}, {0.93, 1.07}, 0.01, 0.01};
  if (dataset == "adult") return ReplicationTarget{"adult", {0.0, 0.3}, {0.9, 1.15}, std::nullopt, std::nullopt};
  return std::nullopt;
}

std::vector<CriterionCheck> check_replication(const ExperimentReport& report, const ReplicationTarget& target) {
  std::vector<CriterionCheck> out;
  auto range_check = [&](const std::string& name, std::optional<AggregateRow> row, Range range) {
    CriterionCheck c{name, false, ""};
    if (!row) {
      c.detail = "not available";
    } else {
      c.passed = range.contains(row->mean);
      c.detail = fixed(row->mean, 4) + " in [" + fixed(range.lo, 2) + ", " + fixed(range.hi, 2) + "]";
    }
    out.push_back(std::move(c));
  };
  const auto failed = std::count_if(report.cells.begin(), report.cells.end(), [](const auto& c) { return !c.ok; });
  out.push_back({"all cells trained", failed == 0, std::to_string(failed) + " failed cells"});
  range_check("baseline DI", report.aggregate_metric(Method::baseline, "disparate_impact"), target.baseline_di);
  range_check("joint DI", report.aggregate_metric(Method::joint, "disparate_impact"), target.adjusted_di);
  range_check("adjuster DI", report.aggregate_metric(Method::adjuster, "disparate_impact"), target.adjusted_di);
  if (target.max_accuracy_gap) {
    const auto a = report.aggregate_metric(Method::adjuster, "accuracy");
    const auto j = report.aggregate_metric(Method::joint, "accuracy");
    CriterionCheck c{"accuracy gap adjuster vs joint", false, "not available"};
    if (a && j) {
      const double gap = std::abs(a->mean - j->mean);
      c.passed = gap <= *target.max_accuracy_gap;
      c.detail = fixed(gap, 4) + " <= " + fixed(*target.max_accuracy_gap, 2);
    }
    out.push_back(std::move(c));
  }
  if (target.max_abs_delta_loss) {
    const auto dl = report.aggregate_delta_loss();
    CriterionCheck c{"|delta loss|", false, "not available"};
    if (dl) {
      c.passed = std::abs(dl->mean) <= *target.max_abs_delta_loss;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.5f <= %.2f", std::abs(dl->mean), *target.max_abs_delta_loss);
      c.detail = buf;
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace fairadj
