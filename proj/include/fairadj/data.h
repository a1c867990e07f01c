#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairadj/common.h"

namespace fairadj {

class DataError : public Error {
 public:
  using Error::Error;
};

// Tabular dataset with a binary protected attribute.
//
// protected_attr[i] == 1 marks membership of the protected group. Labels are
// {0,1} for classification and real-valued for regression.
struct Dataset {
  Matrix features;
  Vector labels;
  Vector protected_attr;
  int favorable_label = 1;
  std::vector<std::string> feature_names;
  Task task = Task::classification;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }

  Index protected_count() const;
  Index unprotected_count() const { return rows() - protected_count(); }

  // Throws DataError when any invariant is violated.
  void validate() const;

  // Rows in the given order; no group-size checks.
  Dataset subset(std::span<const Index> row_ids) const;
};

// How the columns of a CSV file map onto a Dataset.
struct ColumnSchema {
  std::string label;
  std::string protected_column;
  int favorable_label = 1;
  Task task = Task::classification;
  std::vector<std::string> categorical;
  std::vector<std::string> dropped;
  bool protected_as_feature = false;
};

// Plain header + string cells; quoted fields per RFC 4180.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name, or DataError.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(const std::string& line);

// Numeric columns parse as doubles, categorical columns are one-hot encoded
// with one indicator per distinct value in lexicographic order, named
// "column=value". Empty cells and "?"/"NA" are rejected.
Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema);

struct FoldPlan {
  std::uint64_t seed = 0;
  int k = 0;
  std::vector<int> assignments;

  std::vector<Index> test_rows(int fold) const;
  std::vector<Index> train_rows(int fold) const;
};

// Shuffles 0..n-1 with Fisher-Yates driven by std::mt19937_64(seed), then
// deals positions round-robin: shuffled position p lands in fold p % k.
FoldPlan make_folds(Index n, int k, std::uint64_t seed);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  // Set when either side lost one of the protected groups entirely.
  bool degenerate_groups = false;
};

TrainTestSplit split(const Dataset& dataset, const FoldPlan& plan, int fold);

struct DatasetEntry {
  std::string name;
  std::filesystem::path path;
  ColumnSchema schema;
};

// INI-style manifest: one [name] section per dataset with keys path, task,
// label, protected, favorable, categorical, dropped, protected_feature.
class Manifest {
 public:
  static Manifest load(const std::filesystem::path& file);

  const DatasetEntry& entry(const std::string& name) const;
  std::vector<std::string> names() const;
  Dataset load_dataset(const std::string& name) const;

 private:
  std::map<std::string, DatasetEntry> entries_;
};

// $FAIRADJ_DATA_DIR when set, else the data/ directory of the source tree.
std::filesystem::path default_data_dir();

}  // namespace fairadj
