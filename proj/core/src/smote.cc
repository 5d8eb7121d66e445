#include "capsift/smote.h"

#include <algorithm>
#include <map>
#include <string>

#include "capsift/error.h"
#include "capsift/rng.h"

namespace capsift {

std::vector<std::size_t> nearest_members(const Matrix& features,
                                         std::span<const std::size_t> members,
                                         std::size_t position, std::size_t k) {
  const std::size_t self = members[position];
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(members.size());
  for (std::size_t m : members) {
    if (m == self) continue;
    candidates.emplace_back(squared_distance(features.row(self), features.row(m)), m);
  }
  k = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = candidates[i].second;
  return out;
}

ResampledDataset smote(const Matrix& features, std::span<const Label> labels,
                       const SmoteParams& params) {
  if (features.rows() != labels.size()) {
    throw InputError("smote: " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (features.rows() < 2) throw InputError("smote: need at least 2 samples");
  if (features.cols() == 0) throw InputError("smote: feature dimension is 0");
  if (params.k_neighbors == 0) throw InputError("smote: k_neighbors must be >= 1");
  if (!features.all_finite()) throw InputError("smote: non-finite feature value");

  std::map<Label, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& [label, idx] : members) {
    if (idx.size() < 2) {
      throw InputError("smote: class " + std::to_string(label) + " has " +
                       std::to_string(idx.size()) + " sample(s), need at least 2");
    }
    majority = std::max(majority, idx.size());
  }

  ResampledDataset out;
  out.features = features;
  out.labels.assign(labels.begin(), labels.end());
  out.synthetic_mask.assign(labels.size(), false);

  Rng rng(params.seed);
  std::vector<double> point(features.cols());
  for (const auto& [label, idx] : members) {
    const std::size_t needed = majority - idx.size();
    if (needed == 0) continue;
    const std::size_t k = std::min(params.k_neighbors, idx.size() - 1);
    std::vector<std::vector<std::size_t>> neighbors(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) {
      neighbors[p] = nearest_members(features, idx, p, k);
    }
    for (std::size_t s = 0; s < needed; ++s) {
      const std::size_t p = rng.uniform_index(idx.size());
      const std::size_t base = idx[p];
      const std::size_t neighbor = neighbors[p][rng.uniform_index(neighbors[p].size())];
      const double u = rng.uniform01();
      const auto a = features.row(base);
      const auto b = features.row(neighbor);
      for (std::size_t c = 0; c < point.size(); ++c) point[c] = a[c] + u * (b[c] - a[c]);
      out.features.append_row(point);
      out.labels.push_back(label);
      out.synthetic_mask.push_back(true);
      out.provenance.push_back({base, neighbor, u});
    }
  }
  return out;
}

}  // namespace capsift
