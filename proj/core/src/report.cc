#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "capsift/error.h"
#include "capsift/experiment.h"
#include "capsift/rng.h"

namespace capsift {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_2dp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ReportRow to_row(const EvaluationReport& r) {
  return {r.topic,
          std::string(task_name(r.task)),
          r.embedding,
          r.model,
          r.metrics.f1_weighted,
          r.metrics.precision_weighted,
          r.metrics.recall_weighted,
          r.metrics.accuracy,
          r.auc_roc,
          r.seed};
}

EmbeddingScoreRow to_row(const TaskEmbeddingScore& s) {
  return {s.topic, std::string(task_name(s.task)), s.score.embedding, s.score.t, s.score.mu};
}

std::string format_reports_csv(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  out << kReportsHeader << '\n';
  for (const auto& report : reports) {
    const ReportRow r = to_row(report);
    out << r.topic << ',' << r.task << ',' << r.embedding << ',' << r.model << ','
        << format_double(r.f1_weighted) << ',' << format_double(r.precision_weighted) << ','
        << format_double(r.recall_weighted) << ',' << format_double(r.accuracy) << ','
        << (r.auc_roc ? format_double(*r.auc_roc) : "") << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string format_embedding_scores_csv(const std::vector<TaskEmbeddingScore>& scores) {
  std::ostringstream out;
  out << kEmbeddingScoresHeader << '\n';
  for (const auto& score : scores) {
    const auto r = to_row(score);
    out << r.topic << ',' << r.task << ',' << r.embedding << ',' << r.t << ','
        << format_2dp(r.mu) << '\n';
  }
  return out.str();
}

std::string format_best_models_markdown(const RunResult& result) {
  std::ostringstream out;
  out << "# Best models per topic\n\n";
  out << "Ranked by weighted F1 on the held-out split. The dummy baseline (strategy: "
      << kDummyStrategy << ") is shown for comparison and never selected.\n";
  for (Task task : {Task::ThreeClass, Task::Binary}) {
    bool any = false;
    for (const auto& b : result.best_models) any = any || b.task == task;
    if (!any) continue;
    const bool binary = task == Task::Binary;
    out << "\n## "
        << (binary ? "Binary: misinformation vs. others"
                   : "Three-class: misinformation / debunking / neutral")
        << "\n\n";
    out << "| Topic | Model | Embedding | F1 | Precision | Recall | Accuracy |"
        << (binary ? " AUC |" : "") << " Dummy F1 |" << (binary ? " Dummy AUC |" : "") << "\n";
    out << "|---|---|---|---|---|---|---|" << (binary ? "---|" : "") << "---|"
        << (binary ? "---|" : "") << "\n";
    for (const auto& b : result.best_models) {
      if (b.task != task) continue;
      const auto& m = b.best.metrics;
      out << "| " << b.topic << " | " << b.best.model << " | " << b.best.embedding << " | "
          << format_2dp(m.f1_weighted) << " | " << format_2dp(m.precision_weighted) << " | "
          << format_2dp(m.recall_weighted) << " | " << format_2dp(m.accuracy) << " |";
      if (binary) out << ' ' << (b.best.auc_roc ? format_2dp(*b.best.auc_roc) : "-") << " |";
      out << ' ' << (b.dummy ? format_2dp(b.dummy->metrics.f1_weighted) : "-") << " |";
      if (binary) {
        out << ' ' << (b.dummy && b.dummy->auc_roc ? format_2dp(*b.dummy->auc_roc) : "-") << " |";
      }
      out << '\n';
    }
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_field(const std::string& s, std::size_t line, const char* file) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(file, line, "bad number '" + s + "'");
  }
  return v;
}

template <typename Fn>
void for_data_lines(std::string_view text, std::string_view header, const char* file, Fn fn) {
  std::size_t start = 0;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!seen_header) {
      if (line != header) throw ParseError(file, line_no, "unexpected header");
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;
    fn(split_csv(line), line_no);
  }
  if (!seen_header) throw ParseError(file, 1, "missing header");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string dash_if_empty(const std::string& s) { return s.empty() ? "-" : s; }

}  // namespace

std::vector<ReportRow> parse_reports_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  for_data_lines(text, kReportsHeader, "reports.csv", [&](auto f, std::size_t line) {
    if (f.size() != 10) throw ParseError("reports.csv", line, "expected 10 columns");
    ReportRow r;
    r.topic = f[0];
    r.task = f[1];
    r.embedding = f[2];
    r.model = f[3];
    r.f1_weighted = parse_field<double>(f[4], line, "reports.csv");
    r.precision_weighted = parse_field<double>(f[5], line, "reports.csv");
    r.recall_weighted = parse_field<double>(f[6], line, "reports.csv");
    r.accuracy = parse_field<double>(f[7], line, "reports.csv");
    if (!f[8].empty()) r.auc_roc = parse_field<double>(f[8], line, "reports.csv");
    r.seed = parse_field<std::uint64_t>(f[9], line, "reports.csv");
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<EmbeddingScoreRow> parse_embedding_scores_csv(std::string_view text) {
  std::vector<EmbeddingScoreRow> rows;
  for_data_lines(text, kEmbeddingScoresHeader, "embedding_scores.csv",
                 [&](auto f, std::size_t line) {
                   if (f.size() != 5) {
                     throw ParseError("embedding_scores.csv", line, "expected 5 columns");
                   }
                   rows.push_back({f[0], f[1], f[2],
                                   parse_field<std::size_t>(f[3], line, "embedding_scores.csv"),
                                   parse_field<double>(f[4], line, "embedding_scores.csv")});
                 });
  return rows;
}

void emit_report(const RunResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir, ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error("cannot create output directory '" + dir.string() + "'");
  }
  const bool csv = format != ReportFormat::Markdown;
  const bool markdown = format != ReportFormat::Csv;

  if (csv) {
    write_file(dir / "reports.csv", format_reports_csv(result.reports));
    write_file(dir / "embedding_scores.csv", format_embedding_scores_csv(result.embedding_scores));
    std::ostringstream log;
    for (const auto& e : result.exclusions) {
      log << "excluded\t" << dash_if_empty(e.topic) << '\t' << dash_if_empty(e.embedding) << '\t'
          << dash_if_empty(e.video_id) << '\t' << e.reason << '\n';
    }
    for (const auto& f : result.failures) {
      log << "failed\t" << dash_if_empty(f.topic) << '\t' << dash_if_empty(f.embedding) << '\t'
          << dash_if_empty(f.video_id) << '\t' << f.reason << '\n';
    }
    write_file(dir / "exclusions.log", log.str());
  }
  if (markdown) write_file(dir / "best_models.md", format_best_models_markdown(result));
  if (format == ReportFormat::All) {
    write_file(dir / "resolved_config.txt", config.resolved_text());
    std::ostringstream meta;
    meta << "fingerprint = " << result.fingerprint << '\n'
         << "rng = " << Rng::kAlgorithm << '\n'
         << "master_seed = " << config.master_seed << '\n'
         << "split = stratified single split, test_fraction " << format_double(config.test_fraction)
         << ", shared by both tasks\n"
         << "smote = training split only, k " << config.smote_k << '\n'
         << "dummy_strategy = " << kDummyStrategy << '\n'
         << "reports = " << result.reports.size() << '\n'
         << "exclusions = " << result.exclusions.size() << '\n'
         << "failures = " << result.failures.size() << '\n';
    write_file(dir / "run_metadata.txt", meta.str());
  }
}

}  // namespace capsift
