#include "capsift/forest.h"

#include <algorithm>
#include <numeric>
#include <optional>

#include "capsift/error.h"

namespace capsift {

double gini_impurity(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  const double n = static_cast<double>(total);
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / n;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace {

std::size_t majority(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const std::size_t> y, std::size_t n_classes,
              const CartParams& params, Rng& rng)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), rng_(rng) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<CartTree::Node> build(std::vector<std::size_t> samples) {
    grow(samples, 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child impurity sum, n_l*g_l + n_r*g_r
  };

  std::uint32_t grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();

    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t s : samples) ++counts[y_[s]];
    nodes_[id].leaf_class = static_cast<std::uint32_t>(majority(counts));

    const std::size_t n = samples.size();
    const double parent = gini_impurity(counts, n) * static_cast<double>(n);
    if (depth >= params_.max_depth || n < 2 * params_.min_leaf || parent <= 0.0) return id;

    const auto split = best_split(samples, parent);
    if (!split) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t s : samples) {
      (x_(s, split->feature) <= split->threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    nodes_[id].feature = static_cast<std::int32_t>(split->feature);
    nodes_[id].threshold = split->threshold;
    const std::uint32_t l = grow(left, depth + 1);
    nodes_[id].left = l;
    const std::uint32_t r = grow(right, depth + 1);
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = features_.size();
    const std::size_t m = std::min(params_.max_features, d);
    if (m >= d) return features_;
    // Partial Fisher-Yates over a scratch copy; examined in ascending order.
    std::vector<std::size_t> pool = features_;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng_.uniform_index(d - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& samples, double parent) {
    const std::size_t n = samples.size();
    std::optional<Split> best;
    std::vector<std::pair<double, std::size_t>> order(n);
    std::vector<std::size_t> left_counts(n_classes_);
    std::vector<std::size_t> right_counts(n_classes_);

    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) order[i] = {x_(samples[i], f), y_[samples[i]]};
      std::sort(order.begin(), order.end());
      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::fill(right_counts.begin(), right_counts.end(), 0);
      for (const auto& o : order) ++right_counts[o.second];

      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left_counts[order[i].second];
        --right_counts[order[i].second];
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (order[i].first == order[i + 1].first) continue;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double impurity = gini_impurity(left_counts, nl) * static_cast<double>(nl) +
                                gini_impurity(right_counts, nr) * static_cast<double>(nr);
        if (!best || impurity < best->impurity) {
          const double a = order[i].first;
          const double b = order[i + 1].first;
          double threshold = a / 2.0 + b / 2.0;
          if (!(threshold >= a && threshold < b)) threshold = a;
          best = Split{f, threshold, impurity};
        }
      }
    }
    // Only splits that strictly reduce impurity are kept.
    if (best && best->impurity < parent - 1e-12) return best;
    return std::nullopt;
  }

  const Matrix& x_;
  std::span<const std::size_t> y_;
  std::size_t n_classes_;
  CartParams params_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<CartTree::Node> nodes_;
};

}  // namespace

CartTree CartTree::fit(const Matrix& features, std::span<const std::size_t> y,
                       std::size_t n_classes, std::span<const std::size_t> samples,
                       const CartParams& params, Rng& rng) {
  if (samples.empty()) throw InputError("cart: no samples");
  if (params.min_leaf == 0 || params.max_features == 0) {
    throw InputError("cart: min_leaf and max_features must be >= 1");
  }
  TreeBuilder builder(features, y, n_classes, params, rng);
  CartTree tree;
  tree.nodes_ = builder.build(std::vector<std::size_t>(samples.begin(), samples.end()));
  return tree;
}

CartTree CartTree::from_nodes(std::vector<Node> nodes) {
  if (nodes.empty()) throw InputError("cart: tree has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    if (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= nodes.size() ||
                              node.right >= nodes.size())) {
      throw InputError("cart: malformed node " + std::to_string(i));
    }
  }
  CartTree tree;
  tree.nodes_ = std::move(nodes);
  return tree;
}

std::size_t CartTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& node = nodes_[i];
    i = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[i].leaf_class;
}

std::size_t CartTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

}  // namespace capsift
