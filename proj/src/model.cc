#include "fairadj/model.h"

#include <fstream>
#include <sstream>

namespace fairadj {
namespace {

std::string expect_key(std::istream& in, const std::string& key) {
  std::string word;
  if (!(in >> word) || word != key) throw Error("model file: expected '" + key + "', got '" + word + "'");
  std::string value;
  if (!(in >> value)) throw Error("model file: missing value for '" + key + "'");
  return value;
}

double read_double(std::istream& in) {
  std::string word;
  if (!(in >> word)) throw Error("model file: truncated");
  return parse_double(word);
}

long read_int(std::istream& in) {
  std::string word;
  if (!(in >> word)) throw Error("model file: truncated");
  return std::stol(word);
}

}  // namespace

ScoreVector predict(const Model& model, const Matrix& features) {
  return std::visit([&](const auto& m) { return predict(m, features); }, model);
}

Index feature_count(const Model& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) return lin->features();
  return std::get<BoostedTreesModel>(model).n_features;
}

void save_model(const Model& model, std::ostream& out) {
  out << "fairadj-model 1\n";
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    out << "type linear\n"
        << "task " << to_string(lin->task) << "\n"
        << "n_features " << lin->features() << "\n"
        << "beta";
    for (Index i = 0; i < lin->beta.size(); ++i) out << ' ' << format_double(lin->beta[i]);
    out << "\nend\n";
    return;
  }
  const auto& b = std::get<BoostedTreesModel>(model);
  out << "type boosted\n"
      << "task " << to_string(b.task) << "\n"
      << "n_features " << b.n_features << "\n"
      << "base_score " << format_double(b.base_score) << "\n"
      << "learning_rate " << format_double(b.learning_rate) << "\n"
      << "max_depth " << b.params.max_depth << "\n"
      << "rounds " << b.params.rounds << "\n"
      << "min_child_weight " << format_double(b.params.min_child_weight) << "\n"
      << "l2_reg " << format_double(b.params.l2_reg) << "\n"
      << "trees " << b.trees.size() << "\n";
  for (const auto& tree : b.trees) {
    out << "tree " << tree.nodes.size() << "\n";
    for (const auto& node : tree.nodes) {
      out << node.feature << ' ' << format_double(node.threshold) << ' ' << node.left << ' ' << node.right
          << ' ' << format_double(node.value) << "\n";
    }
  }
  out << "end\n";
}

Model load_model(std::istream& in) {
  if (expect_key(in, "fairadj-model") != "1") throw Error("model file: unsupported version");
  const std::string type = expect_key(in, "type");
  const Task task = parse_task(expect_key(in, "task"));
  const Index d = std::stol(expect_key(in, "n_features"));
  if (type == "linear") {
    std::string word;
    in >> word;
    if (word != "beta") throw Error("model file: expected 'beta'");
    LinearModel m;
    m.task = task;
    m.beta.resize(d + 1);
    for (Index i = 0; i <= d; ++i) m.beta[i] = read_double(in);
    in >> word;
    if (word != "end") throw Error("model file: expected 'end'");
    return m;
  }
  if (type != "boosted") throw Error("model file: unknown model type '" + type + "'");
  BoostedTreesModel m;
  m.task = task;
  m.n_features = d;
  m.base_score = parse_double(expect_key(in, "base_score"));
  m.learning_rate = parse_double(expect_key(in, "learning_rate"));
  m.params.max_depth = std::stoi(expect_key(in, "max_depth"));
  m.params.rounds = std::stoi(expect_key(in, "rounds"));
  m.params.min_child_weight = parse_double(expect_key(in, "min_child_weight"));
  m.params.l2_reg = parse_double(expect_key(in, "l2_reg"));
  m.params.learning_rate = m.learning_rate;
  m.params.base_score = m.base_score;
  const long tree_count = std::stol(expect_key(in, "trees"));
  for (long t = 0; t < tree_count; ++t) {
    const long nodes = std::stol(expect_key(in, "tree"));
    RegressionTree tree;
    for (long i = 0; i < nodes; ++i) {
      TreeNode node;
      node.feature = static_cast<int>(read_int(in));
      node.threshold = read_double(in);
      node.left = static_cast<int>(read_int(in));
      node.right = static_cast<int>(read_int(in));
      node.value = read_double(in);
      if (node.feature >= d || (!node.is_leaf() && (node.left <= i || node.right <= i ||
                                                    node.left >= nodes || node.right >= nodes))) {
        throw Error("model file: invalid node in tree " + std::to_string(t));
      }
      tree.nodes.push_back(node);
    }
    m.trees.push_back(std::move(tree));
  }
  std::string word;
  in >> word;
  if (word != "end") throw Error("model file: expected 'end'");
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path.string());
  save_model(model, out);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path.string());
  return load_model(in);
}

std::string model_to_string(const Model& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

}  // namespace fairadj
