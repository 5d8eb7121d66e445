#include "capsift/classifiers.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "capsift/error.h"
#include "capsift/rng.h"

namespace capsift {

namespace {

constexpr Algorithm kAllAlgorithms[] = {
    Algorithm::Knn,          Algorithm::NearestCentroid,    Algorithm::LogisticRegression,
    Algorithm::LinearSvmOvr, Algorithm::GaussianNaiveBayes, Algorithm::RandomForest,
    Algorithm::DummyMostFrequent,
};

bool uses_scaler(const AlgorithmSpec& spec) {
  switch (spec.algorithm) {
    case Algorithm::Knn:
    case Algorithm::LogisticRegression:
    case Algorithm::LinearSvmOvr:
      return true;
    case Algorithm::NearestCentroid:
      return spec.param("standardize") != 0.0;
    default:
      return false;
  }
}

std::size_t as_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

bool is_whole(double v) { return std::isfinite(v) && v == std::floor(v); }

/// In-place softmax; the max shift keeps exp() in range.
void softmax(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

LinearState fit_logistic(const Matrix& x, std::span<const std::size_t> y, std::size_t k,
                         const AlgorithmSpec& spec) {
  double lr = spec.param("lr");
  const double l2 = spec.param("l2");
  const std::size_t iters = as_count(spec.param("iters"));

  LinearState s{Matrix(k, x.cols()), std::vector<double>(k, 0.0), {}};
  SoftmaxObjective current = softmax_objective(s.weights, s.bias, x, y, l2);
  s.loss_history.push_back(current.loss);

  Matrix trial_w = s.weights;
  std::vector<double> trial_b = s.bias;
  for (std::size_t it = 0; it < iters; ++it) {
    bool accepted = false;
    // Step halving: a step that raises the loss is retried at half the rate.
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
          trial_w(r, c) = s.weights(r, c) - lr * current.grad_weights(r, c);
        }
        trial_b[r] = s.bias[r] - lr * current.grad_bias[r];
      }
      SoftmaxObjective next = softmax_objective(trial_w, trial_b, x, y, l2);
      if (next.loss <= current.loss) {
        s.weights = trial_w;
        s.bias = trial_b;
        current = std::move(next);
        s.loss_history.push_back(current.loss);
        accepted = true;
      } else {
        lr /= 2.0;
      }
    }
    if (!accepted) break;
  }
  return s;
}

// One-vs-rest hinge loss per class, scaled so the minimizer matches the usual
// 0.5*||w||^2 + C * sum(hinge) objective:
//   J(w, b) = ||w||^2 / (2 C N) + (1/N) * sum_i max(0, 1 - y_i (w.x_i + b)).
LinearState fit_svm(const Matrix& x, std::span<const std::size_t> y, std::size_t k,
                    const AlgorithmSpec& spec) {
  const double lr = spec.param("lr");
  const double c_margin = spec.param("C");
  const std::size_t iters = as_count(spec.param("iters"));
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double reg = 1.0 / (c_margin * static_cast<double>(n));

  LinearState s{Matrix(k, d), std::vector<double>(k, 0.0), {}};
  std::vector<double> grad(d);
  for (std::size_t cls = 0; cls < k; ++cls) {
    auto w = s.weights.row(cls);
    double& b = s.bias[cls];
    for (std::size_t it = 0; it < iters; ++it) {
      for (std::size_t j = 0; j < d; ++j) grad[j] = reg * w[j];
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double target = y[i] == cls ? 1.0 : -1.0;
        const auto row = x.row(i);
        double margin = b;
        for (std::size_t j = 0; j < d; ++j) margin += w[j] * row[j];
        if (target * margin < 1.0) {
          for (std::size_t j = 0; j < d; ++j) grad[j] -= inv_n * target * row[j];
          grad_b -= inv_n * target;
        }
      }
      for (std::size_t j = 0; j < d; ++j) w[j] -= lr * grad[j];
      b -= lr * grad_b;
    }
  }
  return s;
}

GaussianNbState fit_gaussian_nb(const Matrix& x, std::span<const std::size_t> y, std::size_t k,
                                const AlgorithmSpec& spec) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  GaussianNbState s{Matrix(k, d), Matrix(k, d), std::vector<double>(k, 0.0)};
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[y[i]];
    for (std::size_t j = 0; j < d; ++j) s.means(y[i], j) += x(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) s.means(c, j) /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x(i, j) - s.means(y[i], j);
      s.variances(y[i], j) += diff * diff;
    }
  }

  // Smoothing is relative to the largest overall feature variance.
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    max_var = std::max(max_var, var / static_cast<double>(n));
  }
  double epsilon = spec.param("var_smoothing") * max_var;
  if (epsilon <= 0.0) epsilon = spec.param("var_smoothing");

  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      s.variances(c, j) = s.variances(c, j) / static_cast<double>(counts[c]) + epsilon;
    }
    s.log_priors[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(n));
  }
  return s;
}

ForestState fit_forest(const Matrix& x, std::span<const std::size_t> y, std::size_t k,
                       const AlgorithmSpec& spec) {
  const std::size_t trees = as_count(spec.param("trees"));
  const bool bootstrap = spec.param("bootstrap") != 0.0;
  CartParams params;
  params.max_depth = as_count(spec.param("max_depth"));
  params.min_leaf = as_count(spec.param("min_leaf"));
  const std::size_t mf = as_count(spec.param("max_features"));
  params.max_features =
      mf == 0 ? std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))))
              : mf;

  ForestState s;
  s.trees.reserve(trees);
  std::vector<std::size_t> samples(x.rows());
  for (std::size_t t = 0; t < trees; ++t) {
    // Each tree has its own stream so a tree can be refit in isolation.
    Rng rng(derive_seed(spec.seed, {"tree", std::to_string(t)}));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = bootstrap ? rng.uniform_index(samples.size()) : i;
    }
    s.trees.push_back(CartTree::fit(x, y, k, samples, params, rng));
  }
  return s;
}

}  // namespace

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Knn: return "knn";
    case Algorithm::NearestCentroid: return "nearest_centroid";
    case Algorithm::LogisticRegression: return "logistic_regression";
    case Algorithm::LinearSvmOvr: return "linear_svm_ovr";
    case Algorithm::GaussianNaiveBayes: return "gaussian_nb";
    case Algorithm::RandomForest: return "random_forest";
    case Algorithm::DummyMostFrequent: return "dummy_most_frequent";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

const std::vector<Algorithm>& suite_algorithms() {
  static const std::vector<Algorithm> algorithms(std::begin(kAllAlgorithms),
                                                 std::end(kAllAlgorithms) - 1);
  return algorithms;
}

Hyperparams default_hyperparams(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Knn: return {{"k", 5}};
    case Algorithm::NearestCentroid: return {{"standardize", 0}};
    case Algorithm::LogisticRegression: return {{"lr", 0.1}, {"l2", 1e-4}, {"iters", 500}};
    case Algorithm::LinearSvmOvr: return {{"lr", 0.01}, {"C", 1.0}, {"iters", 500}};
    case Algorithm::GaussianNaiveBayes: return {{"var_smoothing", 1e-9}};
    case Algorithm::RandomForest:
      return {{"trees", 100}, {"max_depth", 12}, {"min_leaf", 2}, {"bootstrap", 1},
              {"max_features", 0}};
    case Algorithm::DummyMostFrequent: return {};
  }
  return {};
}

double AlgorithmSpec::param(std::string_view key) const {
  if (const auto it = hyperparams.find(key); it != hyperparams.end()) return it->second;
  const Hyperparams defaults = default_hyperparams(algorithm);
  if (const auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw InputError(std::string(algorithm_name(algorithm)) + " has no hyperparameter '" +
                   std::string(key) + "'");
}

void AlgorithmSpec::validate() const {
  const Hyperparams defaults = default_hyperparams(algorithm);
  for (const auto& [key, value] : hyperparams) {
    if (!defaults.contains(key)) {
      throw InputError(std::string(algorithm_name(algorithm)) + " has no hyperparameter '" +
                       key + "'");
    }
    if (!std::isfinite(value)) throw InputError("hyperparameter '" + key + "' is not finite");
  }
  const auto require = [&](bool ok, std::string_view what) {
    if (!ok) {
      throw InputError(std::string(algorithm_name(algorithm)) + ": " + std::string(what));
    }
  };
  switch (algorithm) {
    case Algorithm::Knn:
      require(is_whole(param("k")) && param("k") >= 1, "k must be an integer >= 1");
      break;
    case Algorithm::NearestCentroid:
      require(param("standardize") == 0 || param("standardize") == 1, "standardize must be 0 or 1");
      break;
    case Algorithm::LogisticRegression:
      require(param("lr") > 0, "lr must be > 0");
      require(param("l2") >= 0, "l2 must be >= 0");
      require(is_whole(param("iters")) && param("iters") >= 0, "iters must be an integer >= 0");
      break;
    case Algorithm::LinearSvmOvr:
      require(param("lr") > 0, "lr must be > 0");
      require(param("C") > 0, "C must be > 0");
      require(is_whole(param("iters")) && param("iters") >= 0, "iters must be an integer >= 0");
      break;
    case Algorithm::GaussianNaiveBayes:
      require(param("var_smoothing") > 0, "var_smoothing must be > 0");
      break;
    case Algorithm::RandomForest:
      require(is_whole(param("trees")) && param("trees") >= 1, "trees must be an integer >= 1");
      require(is_whole(param("max_depth")) && param("max_depth") >= 1,
              "max_depth must be an integer >= 1");
      require(is_whole(param("min_leaf")) && param("min_leaf") >= 1,
              "min_leaf must be an integer >= 1");
      require(param("bootstrap") == 0 || param("bootstrap") == 1, "bootstrap must be 0 or 1");
      require(is_whole(param("max_features")) && param("max_features") >= 0,
              "max_features must be an integer >= 0");
      break;
    case Algorithm::DummyMostFrequent:
      break;
  }
}

Scaler standardize_fit(const Matrix& features) {
  if (features.rows() == 0) throw InputError("standardize_fit: no rows");
  if (!features.all_finite()) throw InputError("standardize_fit: non-finite value");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += features(i, j);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = features(i, j) - s.mean[j];
      s.std[j] += diff * diff;
    }
  }
  for (double& v : s.std) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v == 0.0) v = 1.0;
  }
  return s;
}

void Scaler::transform_row(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / std[j];
}

Matrix Scaler::transform(const Matrix& features) const {
  if (features.cols() != mean.size()) throw InputError("scaler: dimension mismatch");
  Matrix out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) transform_row(features.row(i), out.row(i));
  return out;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

SoftmaxObjective softmax_objective(const Matrix& weights, std::span<const double> bias,
                                   const Matrix& features, std::span<const std::size_t> y,
                                   double l2) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const std::size_t k = weights.rows();
  SoftmaxObjective out{0.0, Matrix(k, d), std::vector<double>(k, 0.0)};
  std::vector<double> p(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      double z = bias[c];
      const auto w = weights.row(c);
      for (std::size_t j = 0; j < d; ++j) z += w[j] * row[j];
      p[c] = z;
    }
    // log-sum-exp for the loss, then normalize for the gradient.
    const double m = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double z : p) sum += std::exp(z - m);
    out.loss += inv_n * (m + std::log(sum) - p[y[i]]);
    for (std::size_t c = 0; c < k; ++c) {
      const double g = (std::exp(p[c] - m) / sum - (c == y[i] ? 1.0 : 0.0)) * inv_n;
      out.grad_bias[c] += g;
      auto gw = out.grad_weights.row(c);
      for (std::size_t j = 0; j < d; ++j) gw[j] += g * row[j];
    }
  }
  double sq = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      sq += weights(c, j) * weights(c, j);
      out.grad_weights(c, j) += l2 * weights(c, j);
    }
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

TrainedModel::TrainedModel(AlgorithmSpec spec, std::vector<Label> classes, std::size_t dimension,
                           std::optional<Scaler> scaler, State state)
    : spec_(std::move(spec)),
      classes_(std::move(classes)),
      dimension_(dimension),
      scaler_(std::move(scaler)),
      state_(std::move(state)) {
  if (classes_.empty()) throw InputError("model has no classes");
  if (!std::is_sorted(classes_.begin(), classes_.end())) {
    throw InputError("model classes must be sorted ascending");
  }
}

TrainedModel train(const AlgorithmSpec& spec, const Matrix& features,
                   std::span<const Label> labels) {
  spec.validate();
  if (features.rows() != labels.size()) {
    throw InputError("train: " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (features.rows() == 0 || features.cols() == 0) throw InputError("train: empty feature matrix");
  if (!features.all_finite()) throw InputError("train: non-finite feature value");

  std::vector<Label> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw InputError("train: need at least two classes");

  std::vector<std::size_t> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
  }
  const std::size_t k = classes.size();

  std::optional<Scaler> scaler;
  Matrix scaled;
  const Matrix* x = &features;
  if (uses_scaler(spec)) {
    scaler = standardize_fit(features);
    scaled = scaler->transform(features);
    x = &scaled;
  }

  TrainedModel::State state;
  switch (spec.algorithm) {
    case Algorithm::Knn:
      state = KnnState{*x, y, as_count(spec.param("k"))};
      break;
    case Algorithm::NearestCentroid: {
      CentroidState s{Matrix(k, x->cols())};
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < x->rows(); ++i) {
        ++counts[y[i]];
        for (std::size_t j = 0; j < x->cols(); ++j) s.centroids(y[i], j) += (*x)(i, j);
      }
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < x->cols(); ++j) {
          s.centroids(c, j) /= static_cast<double>(counts[c]);
        }
      }
      state = std::move(s);
      break;
    }
    case Algorithm::LogisticRegression:
      state = fit_logistic(*x, y, k, spec);
      break;
    case Algorithm::LinearSvmOvr:
      state = fit_svm(*x, y, k, spec);
      break;
    case Algorithm::GaussianNaiveBayes:
      state = fit_gaussian_nb(*x, y, k, spec);
      break;
    case Algorithm::RandomForest:
      state = fit_forest(*x, y, k, spec);
      break;
    case Algorithm::DummyMostFrequent: {
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t c : y) ++counts[c];
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (counts[c] > counts[best]) best = c;
      }
      state = DummyState{best};
      break;
    }
  }
  return TrainedModel(spec, std::move(classes), features.cols(), std::move(scaler),
                      std::move(state));
}

void TrainedModel::score_row(std::span<const double> row, std::span<double> scores) const {
  const std::size_t k = classes_.size();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          std::vector<std::pair<double, std::size_t>> dist(s.points.rows());
          for (std::size_t i = 0; i < dist.size(); ++i) {
            dist[i] = {squared_distance(row, s.points.row(i)), i};
          }
          const std::size_t kk = std::min(s.k, dist.size());
          std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk),
                            dist.end());
          std::fill(scores.begin(), scores.end(), 0.0);
          for (std::size_t i = 0; i < kk; ++i) scores[s.class_index[dist[i].second]] += 1.0;
          for (double& v : scores) v /= static_cast<double>(kk);
        } else if constexpr (std::is_same_v<T, CentroidState>) {
          for (std::size_t c = 0; c < k; ++c) {
            scores[c] = -std::sqrt(squared_distance(row, s.centroids.row(c)));
          }
          softmax(scores);
        } else if constexpr (std::is_same_v<T, LinearState>) {
          for (std::size_t c = 0; c < k; ++c) {
            double z = s.bias[c];
            const auto w = s.weights.row(c);
            for (std::size_t j = 0; j < row.size(); ++j) z += w[j] * row[j];
            scores[c] = z;
          }
          if (spec_.algorithm == Algorithm::LogisticRegression) softmax(scores);
        } else if constexpr (std::is_same_v<T, GaussianNbState>) {
          for (std::size_t c = 0; c < k; ++c) {
            double lp = s.log_priors[c];
            for (std::size_t j = 0; j < row.size(); ++j) {
              const double var = s.variances(c, j);
              const double diff = row[j] - s.means(c, j);
              lp -= 0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
            }
            scores[c] = lp;
          }
          softmax(scores);
        } else if constexpr (std::is_same_v<T, ForestState>) {
          std::fill(scores.begin(), scores.end(), 0.0);
          for (const auto& tree : s.trees) scores[tree.predict(row)] += 1.0;
          for (double& v : scores) v /= static_cast<double>(s.trees.size());
        } else {
          std::fill(scores.begin(), scores.end(), 0.0);
          scores[s.class_index] = 1.0;
        }
      },
      state_);
}

Matrix TrainedModel::predict_scores(const Matrix& features) const {
  if (features.cols() != dimension_) {
    throw InputError("predict: feature dimension " + std::to_string(features.cols()) +
                     " does not match model dimension " + std::to_string(dimension_));
  }
  Matrix out(features.rows(), classes_.size());
  std::vector<double> scaled(dimension_);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    std::span<const double> row = features.row(i);
    if (scaler_) {
      scaler_->transform_row(row, scaled);
      row = scaled;
    }
    score_row(row, out.row(i));
  }
  return out;
}

std::vector<Label> TrainedModel::predict(const Matrix& features) const {
  const Matrix scores = predict_scores(features);
  std::vector<Label> out(features.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = classes_[argmax(scores.row(i))];
  return out;
}

std::vector<std::size_t> TrainedModel::tree_votes(std::span<const double> row) const {
  const auto* forest = std::get_if<ForestState>(&state_);
  if (!forest) throw InputError("tree_votes: model is not a random forest");
  if (row.size() != dimension_) throw InputError("tree_votes: dimension mismatch");
  std::vector<std::size_t> votes;
  votes.reserve(forest->trees.size());
  for (const auto& tree : forest->trees) votes.push_back(tree.predict(row));
  return votes;
}

}  // namespace capsift
