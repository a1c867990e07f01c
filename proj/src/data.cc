#include "fairadj/data.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fairadj/random.h"

#ifndef FAIRADJ_SOURCE_DATA_DIR
#define FAIRADJ_SOURCE_DATA_DIR "data"
#endif

namespace fairadj {
namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN";
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool contains(const std::vector<std::string>& names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

Index Dataset::protected_count() const {
  Index count = 0;
  for (Index i = 0; i < protected_attr.size(); ++i) count += protected_attr[i] == 1.0;
  return count;
}

void Dataset::validate() const {
  const Index n = rows();
  if (n < 1) throw DataError("dataset has no rows");
  if (cols() < 1) throw DataError("dataset has no feature columns");
  if (labels.size() != n || protected_attr.size() != n) {
    throw DataError("features, labels and protected attribute differ in length");
  }
  if (static_cast<Index>(feature_names.size()) != cols()) {
    throw DataError("feature_names does not match the feature count");
  }
  if (favorable_label != 0 && favorable_label != 1) throw DataError("favorable label must be 0 or 1");
  for (Index i = 0; i < n; ++i) {
    if (protected_attr[i] != 0.0 && protected_attr[i] != 1.0) {
      throw DataError("protected attribute must be 0/1 (row " + std::to_string(i) + ")");
    }
    if (task == Task::classification && labels[i] != 0.0 && labels[i] != 1.0) {
      throw DataError("label outside {0,1} at row " + std::to_string(i));
    }
  }
  if (!features.allFinite() || !labels.allFinite()) throw DataError("non-finite value in dataset");
  const Index prot = protected_count();
  if (prot == 0 || prot == n) throw DataError("empty protected group");
}

Dataset Dataset::subset(std::span<const Index> row_ids) const {
  Dataset out;
  const auto m = static_cast<Index>(row_ids.size());
  out.features.resize(m, cols());
  out.labels.resize(m);
  out.protected_attr.resize(m);
  for (Index r = 0; r < m; ++r) {
    const Index src = row_ids[static_cast<std::size_t>(r)];
    out.features.row(r) = features.row(src);
    out.labels[r] = labels[src];
    out.protected_attr[r] = protected_attr[src];
  }
  out.favorable_label = favorable_label;
  out.feature_names = feature_names;
  out.task = task;
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(trim(field));
  return fields;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      table.header = split_csv_line(line);
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw DataError(path.string() + ": missing header row");
  return table;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const CsvTable table = read_csv(path);
  const std::size_t label_col = table.column(schema.label);
  const std::size_t prot_col = table.column(schema.protected_column);
  if (label_col == prot_col) throw DataError("label and protected column must differ");
  for (const auto& c : schema.categorical) table.column(c);
  for (const auto& c : schema.dropped) table.column(c);

  const auto n = static_cast<Index>(table.rows.size());
  if (n == 0) throw DataError(path.string() + ": no data rows");

  auto cell_error = [&](Index row, std::size_t col, const std::string& what) {
    // +2: one for the header, one for 1-based line numbers.
    return DataError(path.string() + ": " + what + " at line " + std::to_string(row + 2) +
                     ", column '" + table.header[col] + "'");
  };
  auto numeric = [&](Index row, std::size_t col) {
    const std::string& cell = table.rows[static_cast<std::size_t>(row)][col];
    if (is_missing(cell)) throw cell_error(row, col, "missing value");
    try {
      return parse_double(cell);
    } catch (const Error&) {
      throw cell_error(row, col, "unparseable cell '" + cell + "'");
    }
  };

  // Column plan: numeric columns take one slot, categorical ones one per value.
  struct Plan {
    std::size_t col;
    std::vector<std::string> levels;  // empty for numeric
    bool categorical;
  };
  std::vector<Plan> plan;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == label_col || contains(schema.dropped, table.header[c])) continue;
    if (c == prot_col && !schema.protected_as_feature) continue;
    if (contains(schema.categorical, table.header[c])) {
      std::set<std::string> levels;
      for (Index r = 0; r < n; ++r) {
        const auto& cell = table.rows[static_cast<std::size_t>(r)][c];
        if (is_missing(cell)) throw cell_error(r, c, "missing value");
        levels.insert(cell);
      }
      plan.push_back({c, {levels.begin(), levels.end()}, true});
      for (const auto& level : levels) names.push_back(table.header[c] + "=" + level);
    } else {
      plan.push_back({c, {}, false});
      names.push_back(table.header[c]);
    }
  }
  if (names.empty()) throw DataError(path.string() + ": no feature columns");

  Dataset ds;
  ds.task = schema.task;
  ds.favorable_label = schema.favorable_label;
  ds.feature_names = names;
  ds.features = Matrix::Zero(n, static_cast<Index>(names.size()));
  ds.labels.resize(n);
  ds.protected_attr.resize(n);
  for (Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    Index out_col = 0;
    for (const auto& p : plan) {
      if (p.categorical) {
        const auto it = std::lower_bound(p.levels.begin(), p.levels.end(), row[p.col]);
        ds.features(r, out_col + (it - p.levels.begin())) = 1.0;
        out_col += static_cast<Index>(p.levels.size());
      } else {
        ds.features(r, out_col++) = numeric(r, p.col);
      }
    }
    ds.labels[r] = numeric(r, label_col);
    if (schema.task == Task::classification && ds.labels[r] != 0.0 && ds.labels[r] != 1.0) {
      throw cell_error(r, label_col, "label outside {0,1}");
    }
    ds.protected_attr[r] = numeric(r, prot_col);
    if (ds.protected_attr[r] != 0.0 && ds.protected_attr[r] != 1.0) {
      throw cell_error(r, prot_col, "protected value outside {0,1}");
    }
  }
  ds.validate();
  return ds;
}

std::vector<Index> FoldPlan::test_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

std::vector<Index> FoldPlan::train_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

FoldPlan make_folds(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  if (k > n) throw DataError("fold count " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  shuffle(std::span<Index>(order), rng);

  FoldPlan plan;
  plan.seed = seed;
  plan.k = k;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    plan.assignments[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return plan;
}

TrainTestSplit split(const Dataset& dataset, const FoldPlan& plan, int fold) {
  if (fold < 0 || fold >= plan.k) throw DataError("fold id out of range");
  if (static_cast<Index>(plan.assignments.size()) != dataset.rows()) {
    throw DataError("fold plan does not match dataset size");
  }
  const auto test_rows = plan.test_rows(fold);
  const auto train_rows = plan.train_rows(fold);
  TrainTestSplit out{dataset.subset(train_rows), dataset.subset(test_rows), false};
  auto degenerate = [](const Dataset& d) {
    const Index p = d.protected_count();
    return p == 0 || p == d.rows();
  };
  out.degenerate_groups = degenerate(out.train) || degenerate(out.test);
  return out;
}

Manifest Manifest::load(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw DataError("missing manifest: " + file.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DataError(std::string("manifest parse error: ") + e.what());
  }
  Manifest m;
  const auto base = file.parent_path();
  for (const auto& [name, section] : tree) {
    auto required = [&, &name = name, &section = section](const char* key) {
      auto v = section.get_optional<std::string>(key);
      if (!v) throw DataError("manifest [" + name + "] lacks key '" + key + "'");
      return trim(*v);
    };
    DatasetEntry e;
    e.name = name;
    e.path = base / required("path");
    e.schema.task = parse_task(required("task"));
    e.schema.label = required("label");
    e.schema.protected_column = required("protected");
    e.schema.favorable_label = std::stoi(section.get<std::string>("favorable", "1"));
    e.schema.categorical = split_list(section.get<std::string>("categorical", ""));
    e.schema.dropped = split_list(section.get<std::string>("dropped", ""));
    e.schema.protected_as_feature = trim(section.get<std::string>("protected_feature", "false")) == "true";
    m.entries_.emplace(name, std::move(e));
  }
  return m;
}

const DatasetEntry& Manifest::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("dataset '" + name + "' not in manifest");
  return it->second;
}

std::vector<std::string> Manifest::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

Dataset Manifest::load_dataset(const std::string& name) const {
  const auto& e = entry(name);
  return load_csv(e.path, e.schema);
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("FAIRADJ_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return FAIRADJ_SOURCE_DATA_DIR;
}

}  // namespace fairadj
