#pragma once

#include "ava/predictor.hpp"

#include <vector>

namespace ava {

struct TreeNode {
  Index feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  Index left = -1;
  Index right = -1;
  Vector class_counts;
  double impurity = 0.0;  // Gini

  bool is_leaf() const { return feature < 0; }
  double samples() const { return class_counts.sum(); }
};

struct TreeConfig {
  // Upper bound on distinct split features after pruning; 0 disables pruning.
  Index max_features = 0;
  Index max_depth = 0;  // 0 = unlimited
  Index min_samples_split = 2;
};

// CART classifier with Gini impurity. predict() returns the leaf's class
// frequencies.
class DecisionTree final : public Predictor {
 public:
  DecisionTree(std::vector<TreeNode> nodes, Index dim, Index num_classes);

  ModelKind kind() const override { return ModelKind::decision_tree; }
  Capabilities capabilities() const override { return {}; }
  Index input_dim() const override { return dim_; }
  Index output_dim() const override { return classes_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  // Total weighted impurity decrease contributed by each feature.
  Vector feature_importance() const;
  // Features used in split nodes, most important first (ties: lower index).
  std::vector<Index> ranked_features() const;

  nlohmann::json to_json() const override;
  static std::unique_ptr<DecisionTree> from_json(const nlohmann::json& j);

 protected:
  Vector do_predict(const Vector& x) const override;

 private:
  std::vector<TreeNode> nodes_;
  Index dim_;
  Index classes_;
};

// Grow greedily until leaves are pure, then collapse every split on the
// least important surplus feature until at most max_features remain.
std::unique_ptr<DecisionTree> train_decision_tree(const Dataset& train, const TreeConfig& config);

// Collapse splits until no more than `max_features` distinct features remain.
std::unique_ptr<DecisionTree> prune_to_features(const DecisionTree& tree, Index max_features);

}  // namespace ava
