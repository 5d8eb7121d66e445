#pragma once

// CART decision trees (Gini impurity) and the random-forest ensemble built
// from them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "capsift/matrix.h"
#include "capsift/rng.h"

namespace capsift {

struct CartParams {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 2;
  /// Features examined per split, 1..D. Values >= D examine every feature and
  /// draw nothing from the generator.
  std::size_t max_features = 1;
};

class CartTree {
 public:
  struct Node {
    // feature < 0 marks a leaf; rows with x[feature] <= threshold go left.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t leaf_class = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  /// Fits on the given sample indices (repeats allowed, as in a bootstrap
  /// sample). `y` holds class indices in [0, n_classes).
  static CartTree fit(const Matrix& features, std::span<const std::size_t> y,
                      std::size_t n_classes, std::span<const std::size_t> samples,
                      const CartParams& params, Rng& rng);

  static CartTree from_nodes(std::vector<Node> nodes);

  /// Class index of the leaf the row lands in.
  std::size_t predict(std::span<const double> row) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

  friend bool operator==(const CartTree&, const CartTree&) = default;

 private:
  std::vector<Node> nodes_;
};

/// Gini impurity of a class-count histogram.
double gini_impurity(std::span<const std::size_t> counts, std::size_t total);

}  // namespace capsift
