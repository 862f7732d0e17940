#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tripod/rng.hpp"

namespace tripod {

struct ForestConfig {
  std::size_t n_trees = 20;
  std::size_t max_depth = 8;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
};

/// CART classifier with Gini splits on threshold midpoints. Ties resolve to the
/// lowest feature index, then the lowest threshold.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    int label = 0;
  };

  /// `rows` may repeat (bootstrap). Considers `mtry` random features per node and
  /// falls back to all features when none of them improves the impurity.
  void fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes, std::span<const std::size_t> rows,
           std::size_t mtry, const ForestConfig& config, Pcg32& rng);

  int predict(const Eigen::MatrixXd& x, std::size_t row) const;

  /// Adds each split's weighted Gini decrease, measured on (x, y), to importance[feature].
  /// Exact in integer arithmetic, so a split carrying no information adds exactly 0.
  void accumulate_importance(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                             std::span<double> importance) const;

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::size_t build(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes, std::vector<std::size_t> rows,
                    std::size_t depth, std::size_t mtry, const ForestConfig& config, Pcg32& rng);

  std::vector<Node> nodes_;
};

class RandomForest {
 public:
  explicit RandomForest(ForestConfig config = {}) : config_(config) {}

  /// Labels must lie in [0, n_classes).
  void fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes);

  int predict(const Eigen::MatrixXd& x, std::size_t row) const;
  /// Accuracy over samples left out of at least one bootstrap; NaN if there are none.
  double oob_accuracy() const { return oob_accuracy_; }
  /// Per-feature impurity decrease on (x, y), summing to 1 (all zeros if no split helps).
  std::vector<double> importances(const Eigen::MatrixXd& x, std::span<const int> y) const;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  ForestConfig config_;
  int n_classes_ = 0;
  std::vector<DecisionTree> trees_;
  double oob_accuracy_ = 0.0;
};

}  // namespace tripod
