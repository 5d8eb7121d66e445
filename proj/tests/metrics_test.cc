#include "capsift/metrics.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "capsift/error.h"

namespace capsift {
namespace {

double pairwise_auc(const std::vector<int>& y, const std::vector<double>& s) {
  double good = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) good += 1;
      else if (s[i] == s[j]) good += 0.5;
    }
  }
  return good / static_cast<double>(pairs);
}

EvaluationReport report(std::string model, double f1, std::string embedding = "e") {
  EvaluationReport r;
  r.model = std::move(model);
  r.embedding = std::move(embedding);
  r.metrics.f1_weighted = f1;
  return r;
}

TEST(Confusion, PerfectPredictions) {
  const std::vector<Label> y = {0, 1, 1};
  const std::vector<Label> classes = {0, 1};
  const auto cm = confusion_matrix(y, y, classes);
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::size_t>>{{1, 0}, {0, 2}}));
  EXPECT_EQ(cm.total(), 3u);
}

TEST(Confusion, HandCount) {
  const std::vector<Label> t = {1, 1, 0, 0, 0}, p = {1, 0, 0, 0, 1}, classes = {0, 1};
  const auto cm = confusion_matrix(t, p, classes);
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::size_t>>{{2, 1}, {1, 1}}));
  EXPECT_EQ(cm.support(0), 3u);
  EXPECT_EQ(cm.support(1), 2u);
}

TEST(Confusion, VacuousClass) {
  const std::vector<Label> t = {0, 1, 0}, p = {1, 1, 0}, classes = {0, 1, 2};
  const auto cm = confusion_matrix(t, p, classes);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(cm.counts[2][j], 0u);
    EXPECT_EQ(cm.counts[j][2], 0u);
  }
}

TEST(Confusion, Errors) {
  const std::vector<Label> a = {0, 1}, b = {0}, c = {0, 5}, classes = {0, 1}, none;
  EXPECT_THROW(confusion_matrix(a, b, classes), InputError);
  EXPECT_THROW(confusion_matrix(a, c, classes), InputError);
  EXPECT_THROW(confusion_matrix(none, none, classes), InputError);
}

TEST(Metrics, PerfectThreeClass) {
  const std::vector<Label> y = {-1, 0, 1, 1, 0}, classes = {-1, 0, 1};
  const auto m = classification_metrics(confusion_matrix(y, y, classes));
  for (const auto& c : m.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_EQ(m.f1_weighted, 1.0);
  EXPECT_EQ(m.precision_weighted, 1.0);
  EXPECT_EQ(m.recall_weighted, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_FALSE(m.zero_division);
}

TEST(Metrics, HandEvaluation) {
  const std::vector<Label> t = {1, 1, 0, 0, 0}, p = {1, 0, 0, 0, 1}, classes = {0, 1};
  const auto m = classification_metrics(confusion_matrix(t, p, classes));
  EXPECT_DOUBLE_EQ(m.per_class[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[1].recall, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[1].f1, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[0].f1, 2.0 / 3.0);
  EXPECT_EQ(m.f1_weighted, 0.6);
  EXPECT_EQ(m.accuracy, 0.6);
}

TEST(Metrics, NeverPredictedClassHasZeroPrecision) {
  const std::vector<Label> t = {0, 1, 1}, p = {0, 0, 0}, classes = {0, 1};
  const auto m = classification_metrics(confusion_matrix(t, p, classes));
  EXPECT_EQ(m.per_class[1].precision, 0.0);
  EXPECT_EQ(m.per_class[1].f1, 0.0);
  EXPECT_TRUE(m.zero_division);
  EXPECT_TRUE(std::isfinite(m.f1_weighted));
}

TEST(Metrics, RandomMatricesAgreeWithBruteForce) {
  std::mt19937_64 gen(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = std::vector<std::size_t>{2, 3, 5}[gen() % 3];
    const std::size_t n = 5 + gen() % 196;
    std::vector<Label> classes(k), t(n), p(n);
    for (std::size_t c = 0; c < k; ++c) classes[c] = static_cast<Label>(c) - 1;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = classes[gen() % k];
      p[i] = gen() % 3 == 0 ? t[i] : classes[gen() % k];
    }
    const auto m = classification_metrics(confusion_matrix(t, p, classes));
    ASSERT_NEAR(m.recall_weighted, m.accuracy, 1e-12);
    double wp = 0, wr = 0, wf = 0, correct = 0;
    double min_f1 = 2, max_f1 = -1;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0, support = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += t[i] == classes[c] && p[i] == classes[c];
        fp += t[i] != classes[c] && p[i] == classes[c];
        fn += t[i] == classes[c] && p[i] != classes[c];
        support += t[i] == classes[c];
      }
      const double prec = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
      const double rec = support == 0 ? 0.0 : double(tp) / double(support);
      const double f1 = prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
      ASSERT_EQ(m.per_class[c].tp, tp);
      ASSERT_EQ(m.per_class[c].fp, fp);
      ASSERT_EQ(m.per_class[c].fn, fn);
      ASSERT_EQ(m.per_class[c].precision, prec);
      ASSERT_EQ(m.per_class[c].recall, rec);
      ASSERT_EQ(m.per_class[c].f1, f1);
      wp += double(support) * prec;
      wr += double(support) * rec;
      wf += double(support) * f1;
      correct += double(tp);
      if (support > 0) {
        min_f1 = std::min(min_f1, f1);
        max_f1 = std::max(max_f1, f1);
      }
    }
    ASSERT_NEAR(m.precision_weighted, wp / double(n), 1e-12);
    ASSERT_NEAR(m.recall_weighted, wr / double(n), 1e-12);
    ASSERT_NEAR(m.f1_weighted, wf / double(n), 1e-12);
    ASSERT_EQ(m.accuracy, correct / double(n));
    for (double v : {m.precision_weighted, m.recall_weighted, m.f1_weighted, m.accuracy}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_LE(m.f1_weighted, max_f1 + 1e-12);
    ASSERT_GE(m.f1_weighted, min_f1 - 1e-12);
  }
}

TEST(Metrics, ComplementSymmetry) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Label> t(30), p(30), ts(30), ps(30);
    for (std::size_t i = 0; i < 30; ++i) {
      t[i] = static_cast<Label>(gen() % 2);
      p[i] = static_cast<Label>(gen() % 2);
      ts[i] = 1 - t[i];
      ps[i] = 1 - p[i];
    }
    const std::vector<Label> classes = {0, 1};
    if (std::count(t.begin(), t.end(), 1) == 0) continue;
    const auto a = classification_metrics(confusion_matrix(t, p, classes));
    const auto b = classification_metrics(confusion_matrix(ts, ps, classes));
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_EQ(a.per_class[c].precision, b.per_class[1 - c].precision);
      EXPECT_EQ(a.per_class[c].recall, b.per_class[1 - c].recall);
      EXPECT_EQ(a.per_class[c].f1, b.per_class[1 - c].f1);
    }
    EXPECT_NEAR(a.f1_weighted, b.f1_weighted, 1e-12);
    EXPECT_EQ(a.accuracy, b.accuracy);
  }
}

TEST(Auc, Examples) {
  EXPECT_EQ(roc_auc_binary(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.2, 0.8, 0.9}), 1.0);
  EXPECT_EQ(roc_auc_binary(std::vector<int>{0, 1, 0, 1}, std::vector<double>{0.3, 0.3, 0.3, 0.3}), 0.5);
  EXPECT_EQ(roc_auc_binary(std::vector<int>{0, 0, 1, 1}, std::vector<double>{0.1, 0.4, 0.35, 0.8}), 0.75);
}

TEST(Auc, SingleClassIsAnError) {
  EXPECT_THROW(roc_auc_binary(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), InputError);
  EXPECT_THROW(roc_auc_binary(std::vector<int>{0, 1}, std::vector<double>{0.1}), InputError);
  EXPECT_THROW(roc_auc_binary(std::vector<int>{0, 2}, std::vector<double>{0.1, 0.2}), InputError);
}

TEST(Auc, AgreesWithPairwiseOracle) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + gen() % 49;
    const bool ties = trial % 2 == 0;
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(gen() % 2);
      s[i] = ties ? static_cast<double>(gen() % 5) / 4.0 : unit(gen);
    }
    y[0] = 0;
    y[1] = 1;
    ASSERT_NEAR(roc_auc_binary(y, s), pairwise_auc(y, s), 1e-12);
  }
}

TEST(Auc, MonotoneTransformsAndNegation) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + gen() % 40;
    std::vector<int> y(n);
    std::vector<double> s(n), lin(n), cube(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(gen() % 2);
      s[i] = unit(gen);
      lin[i] = 2 * s[i] + 1;
      cube[i] = s[i] * s[i] * s[i];
      neg[i] = -s[i];
    }
    y[0] = 0;
    y[1] = 1;
    const double auc = roc_auc_binary(y, s);
    EXPECT_EQ(roc_auc_binary(y, lin), auc);
    EXPECT_EQ(roc_auc_binary(y, cube), auc);
    EXPECT_NEAR(auc + roc_auc_binary(y, neg), 1.0, 1e-12);
  }
}

TEST(Ranking, ByF1ThenName) {
  auto ranked = rank_models({report("B", 0.7), report("A", 0.9)});
  EXPECT_EQ(ranked[0].model, "A");
  EXPECT_EQ(ranked[0].rank, 1u);
  EXPECT_EQ(ranked[1].rank, 2u);
  ranked = rank_models({report("B", 0.8), report("A", 0.8)});
  EXPECT_EQ(ranked[0].model, "A");
  EXPECT_EQ(ranked[1].model, "B");
}

TEST(Ranking, MatchesReferenceSort) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvaluationReport> reports;
    for (int i = 0; i < 10; ++i) {
      reports.push_back(report(std::string(1, static_cast<char>('a' + gen() % 26)) + std::to_string(i),
                               static_cast<double>(gen() % 5) / 4.0));
    }
    auto expected = reports;
    // Selection sort with the same key, written independently.
    for (std::size_t i = 0; i < expected.size(); ++i) {
      std::size_t best = i;
      for (std::size_t j = i + 1; j < expected.size(); ++j) {
        const auto& a = expected[j];
        const auto& b = expected[best];
        if (a.metrics.f1_weighted > b.metrics.f1_weighted ||
            (a.metrics.f1_weighted == b.metrics.f1_weighted && a.model < b.model)) {
          best = j;
        }
      }
      std::swap(expected[i], expected[best]);
    }
    const auto ranked = rank_models(reports);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      ASSERT_EQ(ranked[i].model, expected[i].model);
      ASSERT_EQ(ranked[i].rank, i + 1);
    }
  }
}

TEST(EmbeddingScore, TopTMean) {
  const std::vector<double> f1 = {0.9, 0.8, 0.7, 0.6};
  EXPECT_EQ(top_t_mean(f1, 3), 0.8);
  EXPECT_EQ(top_t_mean(f1, 1), 0.9);
  EXPECT_EQ(top_t_mean(f1, 10), 0.75);
  const std::vector<double> shuffled = {0.6, 0.9, 0.7, 0.8};
  EXPECT_EQ(top_t_mean(shuffled, 3), 0.8);
  EXPECT_THROW(top_t_mean(f1, 0), InputError);
  EXPECT_THROW(top_t_mean(std::vector<double>{}, 3), InputError);
}

TEST(EmbeddingScore, GroupsByEmbedding) {
  const std::vector<EvaluationReport> reports = {
      report("a", 0.9, "glove"), report("b", 0.5, "w2v"), report("c", 0.7, "glove"),
      report("d", 0.3, "w2v"),   report("e", 0.8, "glove")};
  const auto scores = embedding_performance(reports, 2);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_EQ(scores[0].embedding, "glove");
  EXPECT_DOUBLE_EQ(scores[0].mu, 0.85);
  EXPECT_EQ(scores[0].models_used, 2u);
  EXPECT_EQ(scores[1].embedding, "w2v");
  EXPECT_DOUBLE_EQ(scores[1].mu, 0.4);
}

TEST(EmbeddingScore, TOneIsMaximum) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvaluationReport> reports;
    double max_f1 = 0;
    for (int i = 0; i < 1 + static_cast<int>(gen() % 10); ++i) {
      reports.push_back(report("m" + std::to_string(i), unit(gen)));
      max_f1 = std::max(max_f1, reports.back().metrics.f1_weighted);
    }
    const auto scores = embedding_performance(reports, 1);
    ASSERT_EQ(scores.size(), 1u);
    EXPECT_EQ(scores[0].mu, max_f1);
    EXPECT_EQ(scores[0].models_used, 1u);
  }
}

TEST(TaskNames, RoundTrip) {
  EXPECT_EQ(task_name(Task::ThreeClass), "three_class");
  EXPECT_EQ(parse_task("binary"), Task::Binary);
  EXPECT_FALSE(parse_task("ternary").has_value());
}

}  // namespace
}  // namespace capsift
