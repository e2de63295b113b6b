#include "ava/tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace ava {

namespace {

double gini(const Vector& counts) {
  const double n = counts.sum();
  if (n <= 0) return 0.0;
  return 1.0 - (counts / n).squaredNorm();
}

struct Builder {
  const Dataset& data;
  const TreeConfig& config;
  Index classes;
  std::vector<TreeNode> nodes;

  Vector counts(const std::vector<Index>& idx) const {
    Vector c = Vector::Zero(classes);
    for (Index j : idx) c(data.label(j)) += 1.0;
    return c;
  }

  Index build(std::vector<Index> idx, Index depth) {
    TreeNode node;
    node.class_counts = counts(idx);
    node.impurity = gini(node.class_counts);
    const Index id = static_cast<Index>(nodes.size());
    nodes.push_back(node);

    const auto n = static_cast<Index>(idx.size());
    if (node.impurity <= 0.0 || n < config.min_samples_split ||
        (config.max_depth > 0 && depth >= config.max_depth)) {
      return id;
    }

    double best_gain = 1e-12;
    Index best_feature = -1;
    double best_threshold = 0.0;
    std::vector<Index> order = idx;
    for (Index f = 0; f < data.dim(); ++f) {
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return data.features(f, a) < data.features(f, b);
      });
      Vector left = Vector::Zero(classes);
      Vector right = node.class_counts;
      for (Index s = 0; s + 1 < n; ++s) {
        const Index j = order[s];
        left(data.label(j)) += 1.0;
        right(data.label(j)) -= 1.0;
        const double lo = data.features(f, j);
        const double hi = data.features(f, order[s + 1]);
        if (!(hi > lo)) continue;
        const double nl = static_cast<double>(s + 1);
        const double nr = static_cast<double>(n - s - 1);
        const double child = (nl * gini(left) + nr * gini(right)) / static_cast<double>(n);
        const double gain = node.impurity - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Index> li;
    std::vector<Index> ri;
    for (Index j : idx) {
      (data.features(best_feature, j) <= best_threshold ? li : ri).push_back(j);
    }
    const Index l = build(std::move(li), depth + 1);
    const Index r = build(std::move(ri), depth + 1);
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }
};

// Copy the subtree reachable from the root into a compact node list.
std::vector<TreeNode> compact(const std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> out;
  std::function<Index(Index)> copy = [&](Index i) -> Index {
    const Index id = static_cast<Index>(out.size());
    out.push_back(nodes[i]);
    if (!nodes[i].is_leaf()) {
      const Index l = copy(nodes[i].left);
      const Index r = copy(nodes[i].right);
      out[id].left = l;
      out[id].right = r;
    }
    return id;
  };
  copy(0);
  return out;
}

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, Index dim, Index num_classes)
    : nodes_(std::move(nodes)), dim_(dim), classes_(num_classes) {
  if (nodes_.empty()) throw ConfigError("decision tree needs a root node");
}

Vector DecisionTree::do_predict(const Vector& x) const {
  Index i = 0;
  while (!nodes_[i].is_leaf()) {
    i = x(nodes_[i].feature) <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  }
  return nodes_[i].class_counts / nodes_[i].samples();
}

Vector DecisionTree::feature_importance() const {
  Vector imp = Vector::Zero(dim_);
  const double total = nodes_[0].samples();
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    const auto& l = nodes_[node.left];
    const auto& r = nodes_[node.right];
    const double n = node.samples();
    imp(node.feature) +=
        (n * node.impurity - l.samples() * l.impurity - r.samples() * r.impurity) / total;
  }
  return imp;
}

std::vector<Index> DecisionTree::ranked_features() const {
  std::set<Index> used;
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) used.insert(node.feature);
  }
  const Vector imp = feature_importance();
  std::vector<Index> ranked(used.begin(), used.end());
  std::stable_sort(ranked.begin(), ranked.end(), [&](Index a, Index b) { return imp(a) > imp(b); });
  return ranked;
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"impurity", n.impurity},
                     {"counts", std::vector<double>(n.class_counts.data(),
                                                    n.class_counts.data() + n.class_counts.size())}});
  }
  return {{"kind", "decision_tree"}, {"dim", dim_}, {"num_classes", classes_}, {"nodes", nodes}};
}

std::unique_ptr<DecisionTree> DecisionTree::from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.feature = jn.at("feature").get<Index>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<Index>();
    n.right = jn.at("right").get<Index>();
    n.impurity = jn.at("impurity").get<double>();
    const auto c = jn.at("counts").get<std::vector<double>>();
    n.class_counts = Eigen::Map<const Vector>(c.data(), static_cast<Index>(c.size()));
    nodes.push_back(std::move(n));
  }
  return std::make_unique<DecisionTree>(std::move(nodes), j.at("dim").get<Index>(),
                                        j.at("num_classes").get<Index>());
}

std::unique_ptr<DecisionTree> prune_to_features(const DecisionTree& tree, Index max_features) {
  if (max_features < 1) throw ConfigError("max_features must be >= 1");
  std::vector<TreeNode> nodes = tree.nodes();
  while (true) {
    DecisionTree current(compact(nodes), tree.input_dim(), tree.output_dim());
    const auto ranked = current.ranked_features();
    if (static_cast<Index>(ranked.size()) <= max_features) {
      return std::make_unique<DecisionTree>(std::move(current));
    }
    const Index drop = ranked.back();
    nodes = current.nodes();
    for (auto& node : nodes) {
      if (node.feature == drop) {
        node.feature = -1;
        node.left = node.right = -1;
      }
    }
  }
}

std::unique_ptr<DecisionTree> train_decision_tree(const Dataset& train, const TreeConfig& config) {
  if (config.max_features < 0) throw ConfigError("max_features must be >= 0");
  if (train.size() == 0) throw DataError("cannot train on an empty dataset");
  Builder builder{train, config, train.class_count(), {}};
  std::vector<Index> all(train.size());
  std::iota(all.begin(), all.end(), Index{0});
  builder.build(std::move(all), 0);
  DecisionTree grown(std::move(builder.nodes), train.dim(), train.class_count());
  if (config.max_features == 0) return std::make_unique<DecisionTree>(std::move(grown));
  return prune_to_features(grown, config.max_features);
}

}  // namespace ava
