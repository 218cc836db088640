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

// Depth-limited regression trees grown greedily on the second-order
// objective sum_i g_i f(x_i) + h_i f(x_i)^2 / 2.
//
// A node with gradient sum G and Hessian sum H gets weight -G/H. A split
// into (L, R) has gain G_L^2/H_L + G_R^2/H_R - G^2/H. Candidate thresholds
// are midpoints between consecutive distinct feature values; x goes left
// iff x[feature] <= threshold. Ties prefer the lower feature index, then
// the smaller threshold.

#ifndef KTBOOST_TREE_H_
#define KTBOOST_TREE_H_

#include <span>
#include <vector>

#include "ktboost/common.h"

namespace ktboost {

struct TreeParams {
  // Number of edges from the root to the deepest leaf; 1 is a stump.
  int max_depth = 1;
  int min_samples_leaf = 1;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaves only

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class Tree {
 public:
  // Single leaf with weight 0.
  Tree();
  // Nodes in any order with node 0 as the root; validated.
  explicit Tree(std::vector<TreeNode> nodes);

  static Tree constant(double weight);

  const std::vector<TreeNode>& nodes() const { return nodes_; }

  // Index of the leaf node containing x.
  int leaf_of(std::span<const double> x) const;
  double predict(std::span<const double> x) const {
    return nodes_[static_cast<std::size_t>(leaf_of(x))].weight;
  }
  Vector predict(const RowMatrix& x) const;

  int depth() const;
  int num_leaves() const;
  // Largest feature index used by a split, or -1.
  int max_feature() const;

 private:
  std::vector<TreeNode> nodes_;
};

// Row indices sorted by each feature, reusable across boosting iterations.
class FeatureOrder {
 public:
  explicit FeatureOrder(const RowMatrix& x);
  const std::vector<Index>& sorted(Index feature) const {
    return order_[static_cast<std::size_t>(feature)];
  }
  Index n() const { return n_; }

 private:
  Index n_;
  std::vector<std::vector<Index>> order_;
};

// Greedy top-down fit. Throws DataError on empty or mismatched input and
// NumericalError when the Hessians sum to zero.
Tree fit_tree(const RowMatrix& x, const FeatureOrder& order,
              const Eigen::Ref<const Vector>& g, const Eigen::Ref<const Vector>& h,
              const TreeParams& params);

Tree fit_tree(const RowMatrix& x, const Eigen::Ref<const Vector>& g,
              const Eigen::Ref<const Vector>& h, const TreeParams& params);

// sum_i g_i f_i + h_i f_i^2 / 2.
double second_order_risk(const Eigen::Ref<const Vector>& g,
                         const Eigen::Ref<const Vector>& h,
                         const Eigen::Ref<const Vector>& f);

}  // namespace ktboost

#endif  // KTBOOST_TREE_H_
