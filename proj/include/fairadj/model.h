#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "fairadj/boosting.h"
#include "fairadj/linear.h"

namespace fairadj {

using Model = std::variant<LinearModel, BoostedTreesModel>;

ScoreVector predict(const Model& model, const Matrix& features);
Index feature_count(const Model& model);

// Text format, version 1. Line-oriented, whitespace separated:
//
//   fairadj-model 1
//   type linear | boosted
//   task reg | clf
//   n_features <d>
//   linear:   beta <d+1 values, intercept last>
//   boosted:  base_score <v> / learning_rate <v> / max_depth <i> / rounds <i>
//             min_child_weight <v> / l2_reg <v> / trees <T>
//             then per tree: "tree <node count>" followed by one
//             "<feature> <threshold> <left> <right> <value>" line per node
//   end
//
// Doubles are written in shortest round-trip form, so a reloaded model
// predicts bit-identically.
void save_model(const Model& model, std::ostream& out);
Model load_model(std::istream& in);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string model_to_string(const Model& model);

}  // namespace fairadj
