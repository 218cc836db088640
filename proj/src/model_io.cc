/*
 * Copyright 2026 The ktboost Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Model file layout (keys sorted on output):
//
//   {
//     "anchor_sets": [[[x...], ...], ...],   // kernel anchors, shared
//     "f0": [...],
//     "format_version": 1,
//     "iterations": [
//       {"tag": "tree", "per_class": [{"nodes": [{"feature", "threshold",
//                                                 "left", "right"} | {"weight"}]}]},
//       {"tag": "kernel", "per_class": [{"anchors": <index into anchor_sets>,
//                                        "alpha": [...], "rho", "lambda",
//                                        "mode": "exact" | "nystrom"}]}
//     ],
//     "label_map": [...], "loss": "...", "nu": ..., "num_classes": d,
//     "standardizer": {"means": [...], "scales": [...]}, "task": "..."
//   }
//
// Anchors are stored once per set rather than per learner: every kernel
// learner of a run shares the same anchor rows.

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ktboost/boost.h"

namespace ktboost {
namespace {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector json_to_vector(const json& j) {
  if (!j.is_array()) throw FormatError("expected a numeric array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const TreeNode& node : tree.nodes()) {
    if (node.is_leaf()) {
      nodes.push_back({{"weight", node.weight}});
    } else {
      nodes.push_back({{"feature", node.feature},
                       {"threshold", node.threshold},
                       {"left", node.left},
                       {"right", node.right}});
    }
  }
  return {{"nodes", std::move(nodes)}};
}

Tree json_to_tree(const json& j) {
  std::vector<TreeNode> nodes;
  for (const json& n : j.at("nodes")) {
    TreeNode node;
    if (n.contains("weight")) {
      node.weight = n.at("weight").get<double>();
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      if (node.feature < 0) throw FormatError("negative split feature");
    }
    nodes.push_back(node);
  }
  return Tree(std::move(nodes));
}

json matrix_to_json(const RowMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::shared_ptr<const RowMatrix> json_to_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("anchor set must be a nonempty array");
  const auto cols = static_cast<Index>(j.at(0).size());
  auto m = std::make_shared<RowMatrix>(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Index>(j[i].size()) != cols) throw FormatError("ragged anchor set");
    for (Index c = 0; c < cols; ++c) {
      (*m)(static_cast<Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string to_json(const Ensemble& ensemble) {
  std::map<const RowMatrix*, std::size_t> anchor_index;
  json anchor_sets = json::array();
  json iterations = json::array();
  for (const BoostIteration& it : ensemble.iterations()) {
    json per_class = json::array();
    for (const BaseLearner& learner : it.per_class) {
      if (const auto* tree = std::get_if<Tree>(&learner)) {
        per_class.push_back(tree_to_json(*tree));
        continue;
      }
      const auto& kernel = std::get<KernelLearner>(learner);
      const RowMatrix* key = kernel.anchors().get();
      auto [entry, inserted] = anchor_index.try_emplace(key, anchor_index.size());
      if (inserted) anchor_sets.push_back(matrix_to_json(*key));
      per_class.push_back({{"anchors", entry->second},
                           {"alpha", vector_to_json(kernel.alpha())},
                           {"rho", kernel.rho()},
                           {"lambda", kernel.lambda()},
                           {"mode", to_string(kernel.mode())}});
    }
    iterations.push_back({{"tag", to_string(it.tag)}, {"per_class", std::move(per_class)}});
  }
  const json doc = {
      {"format_version", kModelFormatVersion},
      {"task", to_string(ensemble.task())},
      {"num_classes", ensemble.num_classes()},
      {"loss", to_string(ensemble.loss().kind())},
      {"nu", ensemble.nu()},
      {"f0", vector_to_json(ensemble.f0())},
      {"standardizer",
       {{"means", vector_to_json(ensemble.standardizer().means())},
        {"scales", vector_to_json(ensemble.standardizer().scales())}}},
      {"label_map", ensemble.label_map()},
      {"anchor_sets", std::move(anchor_sets)},
      {"iterations", std::move(iterations)},
  };
  return doc.dump() + "\n";
}

Ensemble from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw FormatError("malformed model file: not an object");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("model format version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const Task task = parse_task(doc.at("task").get<std::string>());
    const int num_classes = doc.at("num_classes").get<int>();
    const LossKind loss = parse_loss(doc.at("loss").get<std::string>());
    if (loss != LossFunction::for_task(task, num_classes).kind()) {
      throw FormatError("loss does not match the task");
    }
    std::vector<std::shared_ptr<const RowMatrix>> anchor_sets;
    for (const json& set : doc.at("anchor_sets")) anchor_sets.push_back(json_to_matrix(set));

    std::vector<BoostIteration> iterations;
    for (const json& it : doc.at("iterations")) {
      BoostIteration iteration{parse_learner_tag(it.at("tag").get<std::string>()), {}};
      for (const json& learner : it.at("per_class")) {
        if (iteration.tag == LearnerTag::kTree) {
          iteration.per_class.emplace_back(json_to_tree(learner));
          continue;
        }
        const auto set = learner.at("anchors").get<std::size_t>();
        if (set >= anchor_sets.size()) throw FormatError("anchor set index out of range");
        iteration.per_class.emplace_back(KernelLearner(
            anchor_sets[set], json_to_vector(learner.at("alpha")), learner.at("rho").get<double>(),
            learner.at("lambda").get<double>(),
            parse_kernel_mode(learner.at("mode").get<std::string>())));
      }
      iterations.push_back(std::move(iteration));
    }
    const json& standardizer = doc.at("standardizer");
    return Ensemble(task, num_classes, json_to_vector(doc.at("f0")), doc.at("nu").get<double>(),
                    Standardizer(json_to_vector(standardizer.at("means")),
                                 json_to_vector(standardizer.at("scales"))),
                    doc.at("label_map").get<std::vector<std::string>>(), std::move(iterations));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save(const Ensemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path.string() + "'");
  out << to_json(ensemble);
  if (!out) throw DataError("write failure on '" + path.string() + "'");
}

Ensemble load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

}  // namespace ktboost
