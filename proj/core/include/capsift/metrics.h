#pragma once

// Confusion matrices, per-class and support-weighted precision / recall /
// F1, accuracy, binary ROC-AUC, model ranking and the top-T embedding score.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capsift/matrix.h"

namespace capsift {

enum class Task { ThreeClass, Binary };

/// "three_class" or "binary".
std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);

struct ConfusionMatrix {
  std::vector<Label> classes;
  /// counts[i][j]: true class classes[i], predicted classes[j].
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t support(std::size_t k) const;  // row sum n_k

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws InputError on length mismatch, empty input or a label outside
/// `classes`.
ConfusionMatrix confusion_matrix(std::span<const Label> y_true, std::span<const Label> y_pred,
                                 std::span<const Label> classes);

struct ClassMetrics {
  Label label = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsSummary {
  std::vector<ClassMetrics> per_class;
  double precision_weighted = 0.0;
  double recall_weighted = 0.0;
  double f1_weighted = 0.0;
  double accuracy = 0.0;
  /// True when any 0/0 convention fired (precision, recall or F1 set to 0).
  bool zero_division = false;
};

/// Per-class metrics with zero-division conventions
///   precision_k = 0 if TP_k + FP_k = 0, recall_k = 0 if n_k = 0,
///   f1_k = 0 if precision_k + recall_k = 0,
/// and support-weighted aggregates (1/N) * sum_k n_k * metric_k.
MetricsSummary classification_metrics(const ConfusionMatrix& cm);

/// Mann-Whitney AUC: fraction of (positive, negative) pairs with the
/// positive scored higher, ties counting half. Sort-based, O(n log n).
/// Throws InputError if either class is absent.
double roc_auc_binary(std::span<const int> y_true, std::span<const double> scores);

struct EvaluationReport {
  std::string topic;
  Task task = Task::ThreeClass;
  std::string embedding;
  std::string model;
  std::uint64_t seed = 0;
  ConfusionMatrix confusion;
  MetricsSummary metrics;
  std::optional<double> auc_roc;  // binary task only
  std::size_t rank = 0;           // 1-based, set by rank_models
};

/// Sorted by weighted F1 descending, ties by model name ascending; rank
/// fields are set to 1..n.
std::vector<EvaluationReport> rank_models(std::vector<EvaluationReport> reports);

struct EmbeddingScore {
  std::string embedding;
  std::size_t t = 0;
  double mu = 0.0;
  std::size_t models_used = 0;  // min(T, available)
};

/// Mean of the top min(T, n) weighted F1 values.
double top_t_mean(std::span<const double> f1_scores, std::size_t t);

/// One score per embedding group (ordered by name). Throws InputError for an
/// empty group or T = 0.
std::vector<EmbeddingScore> embedding_performance(
    const std::map<std::string, std::vector<EvaluationReport>>& groups, std::size_t t);

/// Groups reports by their embedding field first.
std::vector<EmbeddingScore> embedding_performance(const std::vector<EvaluationReport>& reports,
                                                  std::size_t t);

}  // namespace capsift
