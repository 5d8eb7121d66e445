#pragma once

// Uniform train / predict / score interface over the classifier suite:
// k-nearest neighbors, nearest centroid, multinomial logistic regression,
// one-vs-rest linear SVM, Gaussian naive Bayes, random forest, and a
// most-frequent dummy baseline.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "capsift/forest.h"
#include "capsift/matrix.h"

namespace capsift {

enum class Algorithm {
  Knn,
  NearestCentroid,
  LogisticRegression,
  LinearSvmOvr,
  GaussianNaiveBayes,
  RandomForest,
  DummyMostFrequent,
};

/// Stable identifiers: knn, nearest_centroid, logistic_regression,
/// linear_svm_ovr, gaussian_nb, random_forest, dummy_most_frequent.
std::string_view algorithm_name(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// The six trainable algorithms, excluding the dummy baseline.
const std::vector<Algorithm>& suite_algorithms();

using Hyperparams = std::map<std::string, double, std::less<>>;

/// Defaults per algorithm:
///   knn:                 k=5
///   nearest_centroid:    standardize=0
///   logistic_regression: lr=0.1 l2=1e-4 iters=500
///   linear_svm_ovr:      lr=0.01 C=1 iters=500
///   gaussian_nb:         var_smoothing=1e-9
///   random_forest:       trees=100 max_depth=12 min_leaf=2 bootstrap=1
///                        max_features=0 (0 means floor(sqrt(D)))
///   dummy_most_frequent: (none)
Hyperparams default_hyperparams(Algorithm algorithm);

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::DummyMostFrequent;
  /// Overrides on top of default_hyperparams(algorithm).
  Hyperparams hyperparams;
  std::uint64_t seed = 0;

  /// Override if present, else the default. Throws InputError for a key the
  /// algorithm does not define.
  double param(std::string_view key) const;
  /// Throws InputError on unknown keys or out-of-range values.
  void validate() const;
};

/// Per-feature standardization (population std; zero std replaced by 1).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  Matrix transform(const Matrix& features) const;
  void transform_row(std::span<const double> in, std::span<double> out) const;
};

Scaler standardize_fit(const Matrix& features);

struct KnnState {
  Matrix points;
  std::vector<std::size_t> class_index;  // per stored point
  std::size_t k = 5;
};

struct CentroidState {
  Matrix centroids;  // one row per class
};

/// Weight matrix (classes x D) plus bias; shared by logistic regression and
/// the one-vs-rest SVM.
struct LinearState {
  Matrix weights;
  std::vector<double> bias;
  /// Objective value at each accepted iterate, starting from the zero model.
  std::vector<double> loss_history;
};

struct GaussianNbState {
  Matrix means;      // classes x D
  Matrix variances;  // classes x D, smoothing included
  std::vector<double> log_priors;
};

struct ForestState {
  std::vector<CartTree> trees;
};

struct DummyState {
  std::size_t class_index = 0;
};

class TrainedModel {
 public:
  using State =
      std::variant<KnnState, CentroidState, LinearState, GaussianNbState, ForestState, DummyState>;

  TrainedModel(AlgorithmSpec spec, std::vector<Label> classes, std::size_t dimension,
               std::optional<Scaler> scaler, State state);

  const AlgorithmSpec& spec() const noexcept { return spec_; }
  /// Sorted ascending; score columns follow this order.
  const std::vector<Label>& classes() const noexcept { return classes_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::optional<Scaler>& scaler() const noexcept { return scaler_; }
  const State& state() const noexcept { return state_; }

  /// Argmax of predict_scores, ties toward the lower class label.
  std::vector<Label> predict(const Matrix& features) const;

  /// M x |classes| scores, higher = more confident. Probabilities for
  /// logistic regression and naive Bayes, vote fractions for knn and the
  /// forest, softmax of negated distances for nearest centroid, raw margins
  /// for the SVM, one-hot for the dummy.
  Matrix predict_scores(const Matrix& features) const;

  /// Per-tree class-index votes for one row (random forest only).
  std::vector<std::size_t> tree_votes(std::span<const double> row) const;

 private:
  void score_row(std::span<const double> row, std::span<double> scores) const;

  AlgorithmSpec spec_;
  std::vector<Label> classes_;
  std::size_t dimension_;
  std::optional<Scaler> scaler_;
  State state_;
};

/// Fits `spec` on the data. Throws InputError for fewer than two classes,
/// mismatched sizes or non-finite features. Iterative fits run a fixed
/// iteration budget and return the final iterate.
TrainedModel train(const AlgorithmSpec& spec, const Matrix& features,
                   std::span<const Label> labels);

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const double> values);

struct SoftmaxObjective {
  double loss = 0.0;
  Matrix grad_weights;
  std::vector<double> grad_bias;
};

/// Mean multinomial cross-entropy plus (l2 / 2) * ||W||^2 (bias not
/// penalized) and its analytic gradient. `y` holds class indices.
SoftmaxObjective softmax_objective(const Matrix& weights, std::span<const double> bias,
                                   const Matrix& features, std::span<const std::size_t> y,
                                   double l2);

/// Versioned text serialization; load(save(m)) predicts identically to m.
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

}  // namespace capsift
