#include "capsift/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "capsift/error.h"

namespace capsift {

std::string_view task_name(Task task) {
  return task == Task::ThreeClass ? "three_class" : "binary";
}

std::optional<Task> parse_task(std::string_view name) {
  if (name == "three_class") return Task::ThreeClass;
  if (name == "binary") return Task::Binary;
  return std::nullopt;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

std::size_t ConfusionMatrix::support(std::size_t k) const {
  return std::accumulate(counts[k].begin(), counts[k].end(), std::size_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const Label> y_true, std::span<const Label> y_pred,
                                 std::span<const Label> classes) {
  if (y_true.size() != y_pred.size()) {
    throw InputError("confusion_matrix: " + std::to_string(y_true.size()) + " true labels but " +
                     std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw InputError("confusion_matrix: no samples");
  ConfusionMatrix cm;
  cm.classes.assign(classes.begin(), classes.end());
  cm.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  const auto index = [&](Label l) {
    const auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) {
      throw InputError("confusion_matrix: label " + std::to_string(l) + " not in class list");
    }
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t t = 0; t < y_true.size(); ++t) ++cm.counts[index(y_true[t])][index(y_pred[t])];
  return cm;
}

MetricsSummary classification_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes.size();
  const std::size_t n = cm.total();
  if (n == 0) throw InputError("classification_metrics: empty confusion matrix");
  MetricsSummary out;
  std::size_t trace = 0;
  double wp = 0.0, wr = 0.0, wf = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m;
    m.label = cm.classes[c];
    m.tp = cm.counts[c][c];
    const std::size_t support = cm.support(c);
    std::size_t predicted = 0;
    for (std::size_t r = 0; r < k; ++r) predicted += cm.counts[r][c];
    m.fn = support - m.tp;
    m.fp = predicted - m.tp;
    trace += m.tp;

    if (predicted == 0) {
      out.zero_division = true;
    } else {
      m.precision = static_cast<double>(m.tp) / static_cast<double>(predicted);
    }
    if (support == 0) {
      out.zero_division = true;
    } else {
      m.recall = static_cast<double>(m.tp) / static_cast<double>(support);
    }
    if (m.precision + m.recall == 0.0) {
      out.zero_division = true;
    } else {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    const double w = static_cast<double>(support);
    wp += w * m.precision;
    wr += w * m.recall;
    wf += w * m.f1;
    out.per_class.push_back(m);
  }
  const double nn = static_cast<double>(n);
  out.precision_weighted = wp / nn;
  out.recall_weighted = wr / nn;
  out.f1_weighted = wf / nn;
  out.accuracy = static_cast<double>(trace) / nn;
  return out;
}

double roc_auc_binary(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw InputError("roc_auc_binary: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so
  // every quantity stays an exact integer.
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      const int y = y_true[order[j]];
      if (y != 0 && y != 1) throw InputError("roc_auc_binary: labels must be 0 or 1");
      group_pos += static_cast<std::uint64_t>(y);
      ++j;
    }
    // Ranks i+1..j average to (i + 1 + j) / 2.
    doubled_rank_sum += group_pos * (i + 1 + j);
    positives += group_pos;
    negatives += (j - i) - group_pos;
    i = j;
  }
  if (positives == 0 || negatives == 0) {
    throw InputError("roc_auc_binary: both classes must be present");
  }
  // U = R_pos - P(P+1)/2, doubled.
  const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<EvaluationReport> rank_models(std::vector<EvaluationReport> reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const EvaluationReport& a, const EvaluationReport& b) {
                     if (a.metrics.f1_weighted != b.metrics.f1_weighted) {
                       return a.metrics.f1_weighted > b.metrics.f1_weighted;
                     }
                     return a.model < b.model;
                   });
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = i + 1;
  return reports;
}

namespace {

// Mean with a compensated sum and an exact division remainder, so results
// such as mean(0.9, 0.8, 0.7) come out as the nearest double to the true
// value instead of carrying the rounding of naive summation.
double accurate_mean(std::span<const double> values) {
  double hi = 0.0, lo = 0.0;
  for (double x : values) {
    const double s = hi + x;
    const double bb = s - hi;
    lo += (hi - (s - bb)) + (x - bb);
    hi = s;
  }
  const double m = static_cast<double>(values.size());
  const double q = hi / m;
  const double r = std::fma(-q, m, hi);
  return q + (r + lo) / m;
}

}  // namespace

double top_t_mean(std::span<const double> f1_scores, std::size_t t) {
  if (t == 0) throw InputError("top-T mean needs T >= 1");
  if (f1_scores.empty()) throw InputError("top-T mean of an empty pool");
  std::vector<double> sorted(f1_scores.begin(), f1_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.resize(std::min(t, sorted.size()));
  return accurate_mean(sorted);
}

std::vector<EmbeddingScore> embedding_performance(
    const std::map<std::string, std::vector<EvaluationReport>>& groups, std::size_t t) {
  if (t == 0) throw InputError("embedding_performance: T must be >= 1");
  std::vector<EmbeddingScore> out;
  for (const auto& [name, reports] : groups) {
    if (reports.empty()) throw InputError("embedding_performance: empty group '" + name + "'");
    const auto ranked = rank_models(reports);
    const std::size_t m = std::min(t, ranked.size());
    std::vector<double> top;
    for (std::size_t i = 0; i < m; ++i) top.push_back(ranked[i].metrics.f1_weighted);
    out.push_back({name, t, accurate_mean(top), m});
  }
  return out;
}

std::vector<EmbeddingScore> embedding_performance(const std::vector<EvaluationReport>& reports,
                                                  std::size_t t) {
  std::map<std::string, std::vector<EvaluationReport>> groups;
  for (const auto& r : reports) groups[r.embedding].push_back(r);
  return embedding_performance(groups, t);
}

}  // namespace capsift
