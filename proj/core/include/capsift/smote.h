#pragma once

// SMOTE oversampling of minority classes up to the majority-class count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "capsift/matrix.h"

namespace capsift {

struct SmoteParams {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// Where a synthetic row came from: row = x[base] + u * (x[neighbor] - x[base]),
/// indices into the input matrix.
struct SyntheticProvenance {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
};

struct ResampledDataset {
  Matrix features;
  std::vector<Label> labels;
  std::vector<bool> synthetic_mask;
  /// One entry per synthetic row, in row order.
  std::vector<SyntheticProvenance> provenance;
};

/// Original rows come first in input order, then synthetic rows grouped by
/// class in ascending label order. Neighbors are same-class, Euclidean, with
/// ties broken by lower input index; k shrinks to class_count - 1 for small
/// classes. Throws InputError for a class with fewer than 2 samples, D = 0 or
/// non-finite features.
ResampledDataset smote(const Matrix& features, std::span<const Label> labels,
                       const SmoteParams& params);

/// The k nearest same-set neighbors of `members[position]` among `members`
/// (indices into `features`), nearest first, ties by lower index.
std::vector<std::size_t> nearest_members(const Matrix& features,
                                         std::span<const std::size_t> members,
                                         std::size_t position, std::size_t k);

}  // namespace capsift
