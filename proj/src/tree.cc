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

#include "ktboost/tree.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace ktboost {
namespace {

// A split must beat this fraction of its term magnitudes to count as a
// positive gain, and beat the incumbent by this fraction to replace it.
constexpr double kGainRelTol = 1e-12;

struct SplitCandidate {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrix& x, const Eigen::Ref<const Vector>& g,
              const Eigen::Ref<const Vector>& h, const TreeParams& params)
      : x_(x), g_(g), h_(h), params_(params), goes_left_(static_cast<std::size_t>(x.rows())) {}

  std::vector<TreeNode> build(std::vector<std::vector<Index>> sorted,
                              std::vector<Index> rows) {
    grow(std::move(sorted), std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::vector<Index>> sorted, std::vector<Index> rows, int depth) {
    double grad = 0.0;
    double hess = 0.0;
    for (Index r : rows) {
      grad += g_[r];
      hess += h_[r];
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{.weight = -grad / hess});

    const auto count = static_cast<Index>(rows.size());
    if (depth >= params_.max_depth || count < 2 * params_.min_samples_leaf) return id;
    const SplitCandidate best = find_split(sorted, grad, hess);
    if (!best.found) return id;

    for (Index r : rows) {
      goes_left_[static_cast<std::size_t>(r)] = x_(r, best.feature) <= best.threshold;
    }
    const auto left_of = [this](Index r) { return goes_left_[static_cast<std::size_t>(r)]; };
    std::vector<std::vector<Index>> left_sorted(sorted.size());
    std::vector<std::vector<Index>> right_sorted(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      for (Index r : sorted[j]) (left_of(r) ? left_sorted[j] : right_sorted[j]).push_back(r);
    }
    std::vector<Index> left_rows;
    std::vector<Index> right_rows;
    for (Index r : rows) (left_of(r) ? left_rows : right_rows).push_back(r);
    sorted.clear();

    const int left = grow(std::move(left_sorted), std::move(left_rows), depth + 1);
    const int right = grow(std::move(right_sorted), std::move(right_rows), depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    node.weight = 0.0;
    return id;
  }

  SplitCandidate find_split(const std::vector<std::vector<Index>>& sorted, double grad,
                            double hess) const {
    SplitCandidate best;
    const double parent = grad * grad / hess;
    const Index min_leaf = params_.min_samples_leaf;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const auto& list = sorted[j];
      const auto count = static_cast<Index>(list.size());
      const auto feature = static_cast<Index>(j);
      double grad_left = 0.0;
      double hess_left = 0.0;
      for (Index pos = 0; pos + 1 < count; ++pos) {
        const Index r = list[static_cast<std::size_t>(pos)];
        grad_left += g_[r];
        hess_left += h_[r];
        const Index n_left = pos + 1;
        if (n_left < min_leaf) continue;
        if (count - n_left < min_leaf) break;
        const double lo = x_(r, feature);
        const double hi = x_(list[static_cast<std::size_t>(pos + 1)], feature);
        if (lo == hi) continue;
        const double grad_right = grad - grad_left;
        const double hess_right = hess - hess_left;
        if (hess_left <= 0.0 || hess_right <= 0.0) continue;
        const double left_term = grad_left * grad_left / hess_left;
        const double right_term = grad_right * grad_right / hess_right;
        const double gain = left_term + right_term - parent;
        if (!(gain > kGainRelTol * (left_term + right_term + parent))) continue;
        if (best.found && !(gain > best.gain + kGainRelTol * std::abs(best.gain))) continue;
        double threshold = 0.5 * (lo + hi);
        if (!(threshold < hi)) threshold = lo;
        best = {true, static_cast<int>(j), threshold, gain};
      }
    }
    return best;
  }

  const RowMatrix& x_;
  const Eigen::Ref<const Vector>& g_;
  const Eigen::Ref<const Vector>& h_;
  const TreeParams& params_;
  std::vector<bool> goes_left_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Tree::Tree() : nodes_{TreeNode{}} {}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DataError("tree without nodes");
  const auto size = static_cast<int>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) {
      if (!std::isfinite(node.weight)) throw DataError("non-finite leaf weight");
      continue;
    }
    if (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size ||
        node.left == node.right || !std::isfinite(node.threshold)) {
      throw DataError("malformed tree node");
    }
    ++parents[static_cast<std::size_t>(node.left)];
    ++parents[static_cast<std::size_t>(node.right)];
  }
  if (parents[0] != 0) throw DataError("tree root has a parent");
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] != 1) throw DataError("tree nodes do not form a tree");
  }
  // Every non-root node has exactly one parent and the root none, so the
  // structure is a forest; a cycle would leave nodes unreachable.
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<int> stack{0};
  std::size_t reached = 0;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(id)]) throw DataError("cyclic tree");
    seen[static_cast<std::size_t>(id)] = true;
    ++reached;
    const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (reached != nodes_.size()) throw DataError("unreachable tree nodes");
}

Tree Tree::constant(double weight) {
  Tree tree;
  tree.nodes_[0].weight = weight;
  return tree;
}

int Tree::leaf_of(std::span<const double> x) const {
  int id = 0;
  while (true) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) return id;
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
}

Vector Tree::predict(const RowMatrix& x) const {
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = predict(row_span(x, i));
  return out;
}

int Tree::depth() const {
  const std::function<int(int)> visit = [&](int id) -> int {
    const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    return node.is_leaf() ? 0 : 1 + std::max(visit(node.left), visit(node.right));
  };
  return visit(0);
}

int Tree::num_leaves() const {
  return static_cast<int>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::max_feature() const {
  int top = -1;
  for (const TreeNode& node : nodes_) top = std::max(top, node.feature);
  return top;
}

FeatureOrder::FeatureOrder(const RowMatrix& x) : n_(x.rows()) {
  order_.resize(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    auto& list = order_[static_cast<std::size_t>(j)];
    list.resize(static_cast<std::size_t>(n_));
    std::iota(list.begin(), list.end(), Index{0});
    std::stable_sort(list.begin(), list.end(),
                     [&](Index a, Index b) { return x(a, j) < x(b, j); });
  }
}

Tree fit_tree(const RowMatrix& x, const FeatureOrder& order,
              const Eigen::Ref<const Vector>& g, const Eigen::Ref<const Vector>& h,
              const TreeParams& params) {
  const Index n = x.rows();
  if (n == 0 || x.cols() == 0) throw DataError("fit_tree on empty input");
  if (g.size() != n || h.size() != n || order.n() != n) {
    throw DataError("fit_tree: gradient/Hessian length does not match the rows");
  }
  if (params.max_depth < 0 || params.min_samples_leaf < 1) {
    throw DataError("fit_tree: max_depth must be >= 0 and min_samples_leaf >= 1");
  }
  if (!g.allFinite() || !h.allFinite() || (h.array() < 0.0).any()) {
    throw NumericalError("fit_tree: gradients must be finite and Hessians nonnegative");
  }
  if (!(h.sum() > 0.0)) throw NumericalError("fit_tree: all-zero Hessian column");

  std::vector<std::vector<Index>> sorted(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) sorted[static_cast<std::size_t>(j)] = order.sorted(j);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  TreeBuilder builder(x, g, h, params);
  return Tree(builder.build(std::move(sorted), std::move(rows)));
}

Tree fit_tree(const RowMatrix& x, const Eigen::Ref<const Vector>& g,
              const Eigen::Ref<const Vector>& h, const TreeParams& params) {
  if (x.rows() == 0) throw DataError("fit_tree on empty input");
  return fit_tree(x, FeatureOrder(x), g, h, params);
}

double second_order_risk(const Eigen::Ref<const Vector>& g,
                         const Eigen::Ref<const Vector>& h,
                         const Eigen::Ref<const Vector>& f) {
  return g.dot(f) + 0.5 * (h.array() * f.array().square()).sum();
}

}  // namespace ktboost
