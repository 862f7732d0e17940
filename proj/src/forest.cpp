#include "tripod/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tripod/error.hpp"

namespace tripod {

namespace {

std::size_t bounded(Pcg32& rng, std::size_t n) {
  // Rejection sampling keeps the draw unbiased and platform independent.
  const std::uint64_t range = n;
  const std::uint64_t limit = (std::uint64_t{1} << 32) - ((std::uint64_t{1} << 32) % range);
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return static_cast<std::size_t>(r % range);
  }
}

int majority(std::span<const std::size_t> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double sum_sq_over(std::span<const std::size_t> counts, std::size_t n) {
  double s = 0.0;
  for (std::size_t c : counts) s += static_cast<double>(c) * static_cast<double>(c);
  return s / static_cast<double>(n);
}

}  // namespace

void DecisionTree::fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                       std::span<const std::size_t> rows, std::size_t mtry, const ForestConfig& config, Pcg32& rng) {
  nodes_.clear();
  if (rows.empty()) throw DomainError("DecisionTree::fit: no rows");
  build(x, y, n_classes, {rows.begin(), rows.end()}, 0, std::clamp<std::size_t>(mtry, 1, x.cols()), config, rng);
}

std::size_t DecisionTree::build(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                                std::vector<std::size_t> rows, std::size_t depth, std::size_t mtry,
                                const ForestConfig& config, Pcg32& rng) {
  const std::size_t id = nodes_.size();
  nodes_.emplace_back();
  const std::size_t k = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y[r])];
  nodes_[id].label = majority(counts);
  const bool pure = std::count(counts.begin(), counts.end(), 0u) == static_cast<std::ptrdiff_t>(k - 1);
  if (pure || depth >= config.max_depth || rows.size() < config.min_samples_split) return id;

  const std::size_t p = static_cast<std::size_t>(x.cols());
  const double parent = sum_sq_over(counts, rows.size());
  const double tol = 1e-12 * static_cast<double>(rows.size());

  struct Best {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };
  auto search = [&](std::span<const std::size_t> features) {
    Best best;
    std::vector<std::size_t> order(rows);
    std::vector<std::size_t> left(k);
    for (std::size_t f : features) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::fill(left.begin(), left.end(), 0);
      double left_sq = 0.0;
      double right_sq = 0.0;
      std::vector<std::size_t> right(counts);
      for (std::size_t c : right) right_sq += static_cast<double>(c) * static_cast<double>(c);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t c = static_cast<std::size_t>(y[order[i]]);
        left_sq += 2.0 * static_cast<double>(left[c]) + 1.0;
        right_sq -= 2.0 * static_cast<double>(right[c]) - 1.0;
        ++left[c];
        --right[c];
        const double a = x(order[i], f);
        const double b = x(order[i + 1], f);
        if (!(a < b)) continue;
        const double n_l = static_cast<double>(i + 1);
        const double n_r = static_cast<double>(order.size() - i - 1);
        const double gain = left_sq / n_l + right_sq / n_r - parent;
        if (gain > best.gain + tol) best = {gain, static_cast<int>(f), a + 0.5 * (b - a)};
      }
    }
    return best;
  };

  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> candidates(all);
  for (std::size_t i = 0; i < mtry; ++i) std::swap(candidates[i], candidates[i + bounded(rng, p - i)]);
  candidates.resize(mtry);
  std::sort(candidates.begin(), candidates.end());
  Best best = search(candidates);
  if (best.feature < 0 && mtry < p) best = search(all);
  if (best.feature < 0) return id;

  std::vector<std::size_t> left_rows;
  std::vector<std::size_t> right_rows;
  for (std::size_t r : rows) (x(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  nodes_[id].feature = best.feature;
  nodes_[id].threshold = best.threshold;
  const std::size_t l = build(x, y, n_classes, std::move(left_rows), depth + 1, mtry, config, rng);
  nodes_[id].left = l;
  const std::size_t r = build(x, y, n_classes, std::move(right_rows), depth + 1, mtry, config, rng);
  nodes_[id].right = r;
  return id;
}

int DecisionTree::predict(const Eigen::MatrixXd& x, std::size_t row) const {
  std::size_t n = 0;
  while (nodes_[n].feature >= 0) {
    n = x(row, nodes_[n].feature) <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
  }
  return nodes_[n].label;
}

void DecisionTree::accumulate_importance(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                                         std::span<double> importance) const {
  const std::size_t k = static_cast<std::size_t>(n_classes);
  const double total = static_cast<double>(x.rows());
  struct Frame {
    std::size_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<std::size_t> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), 0);
  std::vector<Frame> stack;
  stack.push_back({0, std::move(all)});
  std::vector<__int128> cl(k), cr(k);
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    const Node& node = nodes_[frame.node];
    if (node.feature < 0 || frame.rows.empty()) continue;
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    std::fill(cl.begin(), cl.end(), 0);
    std::fill(cr.begin(), cr.end(), 0);
    for (std::size_t r : frame.rows) {
      const auto c = static_cast<std::size_t>(y[r]);
      if (x(r, node.feature) <= node.threshold) {
        left_rows.push_back(r);
        ++cl[c];
      } else {
        right_rows.push_back(r);
        ++cr[c];
      }
    }
    const auto n_l = static_cast<__int128>(left_rows.size());
    const auto n_r = static_cast<__int128>(right_rows.size());
    if (n_l > 0 && n_r > 0) {
      const __int128 n_p = n_l + n_r;
      __int128 sl = 0, sr = 0, sp = 0;
      for (std::size_t c = 0; c < k; ++c) {
        sl += cl[c] * cl[c];
        sr += cr[c] * cr[c];
        sp += (cl[c] + cr[c]) * (cl[c] + cr[c]);
      }
      // N_P G_P - N_L G_L - N_R G_R over the common denominator N_L N_R N_P.
      const __int128 num = sl * n_r * n_p + sr * n_l * n_p - sp * n_l * n_r;
      if (num != 0) {
        const double den = static_cast<double>(n_l) * static_cast<double>(n_r) * static_cast<double>(n_p);
        importance[static_cast<std::size_t>(node.feature)] += static_cast<double>(num) / den / total;
      }
    }
    stack.push_back({node.left, std::move(left_rows)});
    stack.push_back({node.right, std::move(right_rows)});
  }
}

void RandomForest::fit(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());
  if (n == 0 || p == 0) throw DomainError("RandomForest::fit: empty design matrix");
  if (y.size() != n) throw ShapeError("RandomForest::fit: label count does not match rows");
  if (n_classes < 1) throw DomainError("RandomForest::fit: need at least one class");
  for (int v : y)
    if (v < 0 || v >= n_classes) throw DomainError("RandomForest::fit: label out of range");
  n_classes_ = n_classes;
  const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(double(p)))));

  trees_.assign(config_.n_trees, {});
  std::vector<std::vector<std::size_t>> votes(n, std::vector<std::size_t>(static_cast<std::size_t>(n_classes), 0));
  std::vector<char> in_bag(n);
  for (std::size_t t = 0; t < config_.n_trees; ++t) {
    Pcg32 rng(config_.seed, 0x5851f42d4c957f2dULL + t);
    std::vector<std::size_t> rows(n);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto& r : rows) {
      r = bounded(rng, n);
      in_bag[r] = 1;
    }
    trees_[t].fit(x, y, n_classes, rows, mtry, config_, rng);
    for (std::size_t i = 0; i < n; ++i)
      if (!in_bag[i]) ++votes[i][static_cast<std::size_t>(trees_[t].predict(x, i))];
  }
  std::size_t seen = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::accumulate(votes[i].begin(), votes[i].end(), std::size_t{0}) == 0) continue;
    ++seen;
    if (majority(votes[i]) == y[i]) ++correct;
  }
  oob_accuracy_ = seen ? static_cast<double>(correct) / static_cast<double>(seen)
                       : std::numeric_limits<double>::quiet_NaN();
}

int RandomForest::predict(const Eigen::MatrixXd& x, std::size_t row) const {
  if (trees_.empty()) throw Error("RandomForest::predict: not fitted");
  std::vector<std::size_t> votes(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x, row))];
  return majority(votes);
}

std::vector<double> RandomForest::importances(const Eigen::MatrixXd& x, std::span<const int> y) const {
  std::vector<double> imp(static_cast<std::size_t>(x.cols()), 0.0);
  for (const auto& t : trees_) t.accumulate_importance(x, y, n_classes_, imp);
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

}  // namespace tripod
