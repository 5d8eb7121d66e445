#pragma once

// Per-topic experiment pipeline: ingest, vectorize, split, balance, fit the
// classifier suite, evaluate, score embeddings, and write report files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capsift/classifiers.h"
#include "capsift/corpus.h"
#include "capsift/metrics.h"
#include "capsift/smote.h"

namespace capsift {

enum class TaskSelection { ThreeClass, Binary, Both };

std::optional<TaskSelection> parse_task_selection(std::string_view text);  // three|binary|both
std::vector<Task> selected_tasks(TaskSelection selection);

struct EmbeddingSource {
  std::string name;
  std::filesystem::path path;
};

/// Resolved run configuration. Text form (one `key = value` per line, `#`
/// comments), relative paths resolved against the config file's directory:
///
///   manifest = data/manifest.csv
///   captions = data/captions
///   embedding.<name> = path            (one per embedding, 1..n)
///   topics = vaccines,flatearth
///   task = three|binary|both
///   test_fraction = 0.15
///   smote.k = 5
///   algorithms = knn,logistic_regression,...   (default: all six)
///   <algorithm>.<hyperparam> = value   e.g. knn.k = 7
///   top_t = 5,10,15
///   seed = 42
///   out = results
///   stopwords = path                   (default: bundled list)
///   min_chars = 500
///   min_stopword_ratio = 0.05
///   lowercase_embeddings = 0|1
struct ExperimentConfig {
  std::filesystem::path manifest;
  std::filesystem::path captions_root;
  std::vector<EmbeddingSource> embeddings;
  std::vector<Topic> topics;
  TaskSelection task = TaskSelection::Both;
  double test_fraction = 0.15;
  std::size_t smote_k = 5;
  /// Seeds are ignored here; each cell derives its own from master_seed.
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::size_t> top_t = {5, 10, 15};
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "capsift-out";
  std::optional<std::filesystem::path> stopwords_path;
  FilterParams filter;
  bool lowercase_embedding_keys = false;

  /// Throws InputError when an invariant is violated.
  void validate() const;

  /// Canonical `key = value` dump of every setting (paths absolute).
  std::string resolved_text() const;

  /// Hex FNV-1a of resolved_text() without the output directory, so the same
  /// experiment written to two places has one fingerprint.
  std::string fingerprint() const;
};

/// Parses config text; `base_dir` anchors relative paths. Unknown keys and
/// bad values are ParseErrors with line numbers.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Misinformation (1) stays 1; neutral (0) and debunking (-1) become 0.
std::vector<Label> binarize_labels(std::span<const Label> labels);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per class: test count round(n_k * test_fraction) clamped to [1, n_k - 1],
/// members chosen by a seeded shuffle within the class.
SplitIndices stratified_split(std::span<const Label> labels, double test_fraction,
                              std::uint64_t seed);

struct Exclusion {
  std::string topic;
  std::string embedding;  // empty when not embedding-specific
  std::string video_id;   // empty for topic-level entries
  std::string reason;
};

/// Train/test membership actually used for one (topic, embedding) pair, plus
/// the ids that were handed to SMOTE for each task.
struct SplitRecord {
  std::string topic;
  std::string embedding;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::map<Task, std::vector<std::string>> smote_input_ids;
};

struct TaskEmbeddingScore {
  std::string topic;
  Task task = Task::ThreeClass;
  EmbeddingScore score;
};

struct BestModel {
  std::string topic;
  Task task = Task::ThreeClass;
  EvaluationReport best;
  std::optional<EvaluationReport> dummy;  // baseline on the same embedding
};

struct RunResult {
  std::string fingerprint;
  /// Sorted by (topic, task, embedding, model).
  std::vector<EvaluationReport> reports;
  /// Sorted by (topic, task, embedding, T).
  std::vector<TaskEmbeddingScore> embedding_scores;
  std::vector<BestModel> best_models;
  std::vector<Exclusion> exclusions;
  std::vector<SplitRecord> splits;
  /// Topics or cells that did not run, with reasons.
  std::vector<Exclusion> failures;

  bool partial() const noexcept { return !failures.empty(); }
};

/// The name reports use for the dummy baseline's strategy.
inline constexpr std::string_view kDummyStrategy = "most_frequent";

RunResult run_experiment(const ExperimentConfig& config);

enum class ReportFormat { Csv, Markdown, All };

/// Writes into `dir` (created if needed):
///   Csv:      reports.csv, embedding_scores.csv, exclusions.log
///   Markdown: best_models.md
///   All:      both sets, plus resolved_config.txt and run_metadata.txt
/// Throws Error when the directory cannot be written.
void emit_report(const RunResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir, ReportFormat format = ReportFormat::All);

inline constexpr std::string_view kReportsHeader =
    "topic,task,embedding,model,f1_weighted,precision_weighted,recall_weighted,accuracy,auc_roc,"
    "seed";
inline constexpr std::string_view kEmbeddingScoresHeader = "topic,task,embedding,T,mu";

/// One reports.csv row.
struct ReportRow {
  std::string topic;
  std::string task;
  std::string embedding;
  std::string model;
  double f1_weighted = 0, precision_weighted = 0, recall_weighted = 0, accuracy = 0;
  std::optional<double> auc_roc;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EmbeddingScoreRow {
  std::string topic;
  std::string task;
  std::string embedding;
  std::size_t t = 0;
  double mu = 0;  // rendered at 2 decimals in the file

  friend bool operator==(const EmbeddingScoreRow&, const EmbeddingScoreRow&) = default;
};

ReportRow to_row(const EvaluationReport& report);
EmbeddingScoreRow to_row(const TaskEmbeddingScore& score);

std::string format_reports_csv(const std::vector<EvaluationReport>& reports);
std::string format_embedding_scores_csv(const std::vector<TaskEmbeddingScore>& scores);
std::string format_best_models_markdown(const RunResult& result);

std::vector<ReportRow> parse_reports_csv(std::string_view text);
std::vector<EmbeddingScoreRow> parse_embedding_scores_csv(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_double(double v);
/// Fixed two-decimal rendering used in tables.
std::string format_2dp(double v);

}  // namespace capsift
