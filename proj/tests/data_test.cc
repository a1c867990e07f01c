#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "fairadj/data.h"
#include "test_util.h"

using namespace fairadj;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("fairadj_data_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }

  std::filesystem::path write(const std::string& name, const std::string& text) const {
    const auto file = path_ / name;
    std::ofstream(file) << text;
    return file;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

ColumnSchema basic_schema() {
  ColumnSchema s;
  s.label = "y";
  s.protected_column = "p";
  return s;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadCsv, FourRowsTwoNumericFeatures) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x1,x2,p,y\n1,2,0,1\n3,4.5,1,0\n-1,0,0,0\n2,2,1,1\n");
  const Dataset d = load_csv(file, basic_schema());
  EXPECT_EQ(d.rows(), 4);
  EXPECT_EQ(d.cols(), 2);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_DOUBLE_EQ(d.features(1, 1), 4.5);
  EXPECT_EQ(d.labels, (Vector(4) << 1, 0, 0, 1).finished());
  EXPECT_EQ(d.protected_attr, (Vector(4) << 0, 1, 0, 1).finished());
  EXPECT_EQ(d.protected_count(), 2);
}

TEST(LoadCsv, RowOrderPreserved) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n5,0,1\n4,1,0\n3,0,1\n2,1,0\n");
  const Dataset d = load_csv(file, basic_schema());
  EXPECT_EQ(d.features.col(0), (Vector(4) << 5, 4, 3, 2).finished());
}

TEST(LoadCsv, AllProtectedIsAnError) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,1,0\n2,1,1\n");
  EXPECT_NE(error_of([&] { load_csv(file, basic_schema()); }).find("empty protected group"), std::string::npos);
}

TEST(LoadCsv, NoneProtectedIsAnError) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,0,0\n2,0,1\n");
  EXPECT_NE(error_of([&] { load_csv(file, basic_schema()); }).find("empty protected group"), std::string::npos);
}

TEST(LoadCsv, LabelOutsideBinaryForClassification) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,0,0\n2,1,2\n");
  const std::string msg = error_of([&] { load_csv(file, basic_schema()); });
  EXPECT_NE(msg.find("label outside {0,1}"), std::string::npos);
  EXPECT_NE(msg.find("line 3"), std::string::npos);
}

TEST(LoadCsv, RegressionLabelsMayBeReal) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,0,0.25\n2,1,-3\n");
  ColumnSchema s = basic_schema();
  s.task = Task::regression;
  const Dataset d = load_csv(file, s);
  EXPECT_DOUBLE_EQ(d.labels[0], 0.25);
  EXPECT_DOUBLE_EQ(d.labels[1], -3.0);
}

TEST(LoadCsv, UnparseableCellReportsRowAndColumn) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,0,0\nabc,1,1\n");
  const std::string msg = error_of([&] { load_csv(file, basic_schema()); });
  EXPECT_NE(msg.find("unparseable"), std::string::npos);
  EXPECT_NE(msg.find("line 3"), std::string::npos);
  EXPECT_NE(msg.find("column 'x'"), std::string::npos);
}

TEST(LoadCsv, MissingValuesRejected) {
  TempDir dir;
  for (const char* cell : {"", "?", "NA"}) {
    const auto file = dir.write("d.csv", std::string("x,p,y\n1,0,0\n") + cell + ",1,1\n");
    EXPECT_NE(error_of([&] { load_csv(file, basic_schema()); }).find("missing value"), std::string::npos) << cell;
  }
}

TEST(LoadCsv, MissingFile) {
  EXPECT_NE(error_of([] { load_csv("/nonexistent/file.csv", basic_schema()); }).find("missing file"),
            std::string::npos);
}

TEST(LoadCsv, MissingColumn) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,label\n1,0,0\n2,1,1\n");
  EXPECT_NE(error_of([&] { load_csv(file, basic_schema()); }).find("'y' not found"), std::string::npos);
}

TEST(LoadCsv, CategoricalOneHotIsLexicographic) {
  TempDir dir;
  const auto file = dir.write("d.csv", "color,x,p,y\nred,1,0,0\nblue,2,1,1\ngreen,3,0,1\nred,4,1,0\n");
  ColumnSchema s = basic_schema();
  s.categorical = {"color"};
  const Dataset d = load_csv(file, s);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"color=blue", "color=green", "color=red", "x"}));
  Matrix expected(4, 4);
  expected << 0, 0, 1, 1,  //
      1, 0, 0, 2,          //
      0, 1, 0, 3,          //
      0, 0, 1, 4;
  EXPECT_EQ(d.features, expected);
}

TEST(LoadCsv, QuotedFieldsWithCommas) {
  TempDir dir;
  const auto file = dir.write("d.csv", "desc,p,y\n\"a, b\",0,0\n\"say \"\"hi\"\"\",1,1\n");
  ColumnSchema s = basic_schema();
  s.categorical = {"desc"};
  const Dataset d = load_csv(file, s);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"desc=a, b", "desc=say \"hi\""}));
}

TEST(LoadCsv, ProtectedAsFeatureAndDroppedColumns) {
  TempDir dir;
  const auto file = dir.write("d.csv", "id,x,p,y\n10,1,0,0\n11,2,1,1\n");
  ColumnSchema s = basic_schema();
  s.dropped = {"id"};
  s.protected_as_feature = true;
  const Dataset d = load_csv(file, s);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x", "p"}));
  EXPECT_EQ(d.features.col(1), d.protected_attr);
}

TEST(LoadCsv, FavorableLabelCarried) {
  TempDir dir;
  const auto file = dir.write("d.csv", "x,p,y\n1,0,0\n2,1,1\n");
  ColumnSchema s = basic_schema();
  s.favorable_label = 0;
  EXPECT_EQ(load_csv(file, s).favorable_label, 0);
}

TEST(LoadCsv, Deterministic) {
  TempDir dir;
  const auto file = dir.write("d.csv", "c,x,p,y\nb,1.5,0,0\na,2,1,1\nc,-7,1,0\n");
  ColumnSchema s = basic_schema();
  s.categorical = {"c"};
  const Dataset a = load_csv(file, s);
  const Dataset b = load_csv(file, s);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.feature_names, b.feature_names);
}

TEST(DatasetValidate, RejectsMismatchedLengths) {
  Dataset d = testkit::make_dataset(Matrix::Zero(3, 1), Vector::Zero(2), (Vector(3) << 0, 1, 0).finished());
  EXPECT_THROW(d.validate(), DataError);
}

TEST(DatasetValidate, RejectsNonBinaryProtected) {
  Dataset d = testkit::make_dataset(Matrix::Zero(2, 1), Vector::Zero(2), (Vector(2) << 0, 2).finished());
  EXPECT_THROW(d.validate(), DataError);
}

TEST(MakeFolds, FiveRowsFiveFolds) {
  const FoldPlan plan = make_folds(5, 5, 0);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(plan.test_rows(f).size(), 1u);
}

TEST(MakeFolds, TenRowsThreeFolds) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const FoldPlan plan = make_folds(10, 3, seed);
    std::multiset<std::size_t> sizes;
    for (int f = 0; f < 3; ++f) sizes.insert(plan.test_rows(f).size());
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{3, 3, 4}));
  }
}

TEST(MakeFolds, DeterministicForSameSeed) {
  EXPECT_EQ(make_folds(1000, 5, 7).assignments, make_folds(1000, 5, 7).assignments);
  EXPECT_NE(make_folds(1000, 5, 7).assignments, make_folds(1000, 5, 8).assignments);
}

TEST(MakeFolds, MatchesDocumentedShuffle) {
  // Fisher-Yates with bounded draws by rejection on raw mt19937_64 words,
  // then position p goes to fold p % k.
  const Index n = 37;
  const int k = 4;
  const std::uint64_t seed = 2024;
  std::mt19937_64 engine(seed);
  auto below = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    while (true) {
      const std::uint64_t r = engine();
      if (r < limit) return r % bound;
    }
  };
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[below(i)]);
  std::vector<int> expected(n);
  for (Index p = 0; p < n; ++p) expected[order[p]] = static_cast<int>(p % k);
  EXPECT_EQ(make_folds(n, k, seed).assignments, expected);
}

TEST(MakeFolds, KLargerThanNIsAnError) {
  EXPECT_THROW(make_folds(3, 4, 0), DataError);
  EXPECT_THROW(make_folds(10, 1, 0), DataError);
}

TEST(MakeFolds, PartitionProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(200));
    const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min<Index>(n, 10) - 1)));
    const FoldPlan plan = make_folds(n, k, rng.next_u64());
    std::vector<int> seen(n, 0);
    std::size_t smallest = n, largest = 0;
    for (int f = 0; f < k; ++f) {
      const auto rows = plan.test_rows(f);
      smallest = std::min(smallest, rows.size());
      largest = std::max(largest, rows.size());
      for (Index r : rows) ++seen[r];
      const auto train = plan.train_rows(f);
      EXPECT_EQ(train.size() + rows.size(), static_cast<std::size_t>(n));
      std::vector<Index> both;
      std::set_intersection(train.begin(), train.end(), rows.begin(), rows.end(), std::back_inserter(both));
      EXPECT_TRUE(both.empty());
    }
    EXPECT_LE(largest - smallest, 1u);
    EXPECT_GE(smallest, 1u);
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST(Split, TenRowsFiveFolds) {
  Rng rng(3);
  Matrix x = Matrix::NullaryExpr(10, 2, [&] { return rng.normal(); });
  Vector p = (Vector(10) << 1, 0, 1, 0, 1, 0, 1, 0, 1, 0).finished();
  Dataset d = testkit::make_dataset(x, testkit::random_bits(rng, 10), p);
  d.favorable_label = 0;
  const FoldPlan plan = make_folds(10, 5, 1);
  std::set<double> union_rows;
  for (int f = 0; f < 5; ++f) {
    const TrainTestSplit s = split(d, plan, f);
    EXPECT_EQ(s.test.rows(), 2);
    EXPECT_EQ(s.train.rows(), 8);
    EXPECT_EQ(s.test.favorable_label, 0);
    EXPECT_EQ(s.train.favorable_label, 0);
    for (Index r = 0; r < s.test.rows(); ++r) union_rows.insert(s.test.features(r, 0));
  }
  EXPECT_EQ(union_rows.size(), 10u);
}

TEST(Split, FlagsLostGroup) {
  // With a single protected row every split loses the group on one side.
  Vector p = Vector::Zero(6);
  p[0] = 1.0;
  Dataset d = testkit::make_dataset(Matrix::Identity(6, 6), Vector::Zero(6), p);
  const FoldPlan plan = make_folds(6, 3, 5);
  for (int f = 0; f < 3; ++f) EXPECT_TRUE(split(d, plan, f).degenerate_groups);
}

TEST(Manifest, LoadsEntriesRelativeToFile) {
  TempDir dir;
  dir.write("t.csv", "c,x,p,y\nb,1,0,0\na,2,1,1\n");
  const auto ini = dir.write("m.ini",
                             "# comment\n[toy]\npath = t.csv\ntask = clf\nlabel = y\nprotected = p\n"
                             "favorable = 0\ncategorical = c\nprotected_feature = true\n");
  const Manifest m = Manifest::load(ini);
  EXPECT_EQ(m.names(), (std::vector<std::string>{"toy"}));
  const Dataset d = m.load_dataset("toy");
  EXPECT_EQ(d.favorable_label, 0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"c=a", "c=b", "x", "p"}));
  EXPECT_THROW(m.load_dataset("other"), DataError);
}

TEST(Manifest, MissingKeyIsAnError) {
  TempDir dir;
  const auto ini = dir.write("m.ini", "[toy]\npath = t.csv\nlabel = y\n");
  EXPECT_THROW(Manifest::load(ini), DataError);
}

TEST(BundledData, GermanHasOneThousandRows) {
  const Manifest m = Manifest::load(default_data_dir() / "datasets.ini");
  const Dataset d = m.load_dataset("german");
  EXPECT_EQ(d.rows(), 1000);
  EXPECT_EQ(d.favorable_label, 1);
  // Roughly a fifth of applicants are 25 or younger.
  EXPECT_GT(d.protected_count(), 100);
  EXPECT_LT(d.protected_count(), 300);
}

TEST(BundledData, CompasShape) {
  const Dataset d = Manifest::load(default_data_dir() / "datasets.ini").load_dataset("compas");
  EXPECT_EQ(d.rows(), 6167);
  EXPECT_EQ(d.favorable_label, 0);
}
