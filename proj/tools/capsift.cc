// capsift: caption-based misinformation classification experiments.
//
//   capsift run --config <file> [--topics a,b] [--task three|binary|both]
//               [--seed N] [--out DIR]
//   capsift stats --manifest <file> --field views
//   capsift vectorize --embedding <file> --captions <dir> --out <csv>
//
// Exit codes: 0 success, 1 config/input error, 2 partial failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "capsift/corpus.h"
#include "capsift/embedding.h"
#include "capsift/error.h"
#include "capsift/experiment.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitPartial = 2;

struct RunArgs {
  std::string config;
  std::string topics;
  std::string task;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_run(const RunArgs& args) {
  auto config = capsift::load_config(args.config);
  if (!args.topics.empty()) {
    config.topics.clear();
    std::stringstream ss(args.topics);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto topic = capsift::parse_topic(item);
      if (!topic) throw capsift::InputError("unknown topic '" + item + "'");
      config.topics.push_back(*topic);
    }
  }
  if (!args.task.empty()) {
    const auto sel = capsift::parse_task_selection(args.task);
    if (!sel) throw capsift::InputError("--task must be three, binary or both");
    config.task = *sel;
  }
  if (args.seed) config.master_seed = *args.seed;
  if (!args.out.empty()) config.output_dir = std::filesystem::absolute(args.out);

  const auto result = capsift::run_experiment(config);
  capsift::emit_report(result, config, config.output_dir);

  std::cout << "fingerprint " << result.fingerprint << "\n"
            << result.reports.size() << " model reports written to "
            << config.output_dir.string() << "\n";
  for (const auto& b : result.best_models) {
    std::cout << "best " << b.topic << " " << capsift::task_name(b.task) << ": " << b.best.model
              << " / " << b.best.embedding << "  F1 " << capsift::format_2dp(b.best.metrics.f1_weighted);
    if (b.best.auc_roc) std::cout << "  AUC " << capsift::format_2dp(*b.best.auc_roc);
    if (b.dummy) {
      std::cout << "  (dummy " << capsift::kDummyStrategy << " F1 "
                << capsift::format_2dp(b.dummy->metrics.f1_weighted) << ")";
    }
    std::cout << "\n";
  }
  for (const auto& f : result.failures) {
    std::cerr << "warning: " << f.topic << (f.embedding.empty() ? "" : "/" + f.embedding) << ": "
              << f.reason << "\n";
  }
  return result.partial() ? kExitPartial : kExitOk;
}

int cmd_stats(const std::string& manifest_path, const std::string& field_text) {
  const auto field = capsift::parse_engagement_field(field_text);
  if (!field) throw capsift::InputError("--field must be views, likes, dislikes or comments");
  const auto records = capsift::load_manifest(manifest_path);
  const auto stats = capsift::descriptive_stats(records, *field);
  std::cout << "topic,label,field,n,min,q1,median,q3,max\n";
  for (const auto& s : stats) {
    std::cout << capsift::topic_code(s.topic) << ',' << static_cast<int>(s.label) << ','
              << capsift::field_name(s.field) << ',' << s.n << ','
              << capsift::format_double(s.min) << ',' << capsift::format_double(s.q1) << ','
              << capsift::format_double(s.median) << ',' << capsift::format_double(s.q3) << ','
              << capsift::format_double(s.max) << '\n';
  }
  return kExitOk;
}

struct VectorizeArgs {
  std::string embedding;
  std::string captions;
  std::string manifest;
  std::string out;
  std::string stopwords;
  bool lowercase = false;
};

int cmd_vectorize(const VectorizeArgs& args) {
  namespace fs = std::filesystem;
  const fs::path captions = args.captions;
  fs::path manifest_path = args.manifest;
  if (manifest_path.empty()) {
    const fs::path root = fs::absolute(captions).lexically_normal();
    const fs::path dir = root.has_filename() ? root : root.parent_path();
    manifest_path = fs::exists(dir / "manifest.csv") ? dir / "manifest.csv"
                                                     : dir.parent_path() / "manifest.csv";
  }
  const auto records = capsift::load_manifest(manifest_path);
  const auto stopwords = args.stopwords.empty() ? capsift::default_stopwords()
                                                : capsift::load_stopwords(args.stopwords);
  capsift::EmbeddingParseOptions opts;
  opts.lowercase_keys = args.lowercase;
  const auto table = capsift::parse_embedding_file(args.embedding, opts);

  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw capsift::Error("cannot write '" + args.out + "'");
  out << "video_id,label,coverage";
  for (std::size_t k = 1; k <= table.dimension(); ++k) out << ",v" << k;
  out << '\n';

  std::size_t written = 0;
  std::size_t skipped = 0;
  for (const auto& record : records) {
    auto loaded = capsift::load_caption(record, captions);
    if (loaded.skipped()) {
      std::cerr << "skip " << record.video_id << ": " << loaded.skip_reason << "\n";
      ++skipped;
      continue;
    }
    const auto doc = capsift::make_document(record, std::move(*loaded.text), stopwords);
    const auto cv = capsift::vectorize_caption(table, doc.tokens);
    if (!cv.vector) {
      std::cerr << "skip " << record.video_id << ": no in-vocabulary tokens\n";
      ++skipped;
      continue;
    }
    out << record.video_id << ',' << static_cast<int>(record.label) << ','
        << capsift::format_double(cv.coverage());
    for (double v : *cv.vector) out << ',' << capsift::format_double(v);
    out << '\n';
    ++written;
  }
  if (!out) throw capsift::Error("failed writing '" + args.out + "'");
  std::cout << written << " caption vectors written to " << args.out << " (" << skipped
            << " skipped)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capsift: classify video captions as misinformation, debunking or neutral"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the full per-topic experiment sweep");
  run->add_option("--config", run_args.config, "Experiment config file")->required();
  run->add_option("--topics", run_args.topics, "Comma-separated topics (overrides config)");
  run->add_option("--task", run_args.task, "three, binary or both (overrides config)");
  run->add_option("--seed", run_args.seed, "Master seed (overrides config)");
  run->add_option("--out", run_args.out, "Output directory (overrides config)");

  std::string stats_manifest;
  std::string stats_field = "views";
  auto* stats = app.add_subcommand("stats", "Boxplot statistics of engagement counts");
  stats->add_option("--manifest", stats_manifest, "Manifest CSV")->required();
  stats->add_option("--field", stats_field, "views, likes, dislikes or comments");

  VectorizeArgs vec_args;
  auto* vectorize = app.add_subcommand("vectorize", "Export one caption vector per video");
  vectorize->add_option("--embedding", vec_args.embedding, "Embedding file")->required();
  vectorize->add_option("--captions", vec_args.captions, "Caption directory")->required();
  vectorize->add_option("--out", vec_args.out, "Output CSV")->required();
  vectorize->add_option("--manifest", vec_args.manifest,
                        "Manifest CSV (default: manifest.csv in the caption directory or its parent)");
  vectorize->add_option("--stopwords", vec_args.stopwords, "Stopword file (default: bundled)");
  vectorize->add_flag("--lowercase-keys", vec_args.lowercase, "Lowercase embedding keys on load");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*stats) return cmd_stats(stats_manifest, stats_field);
    if (*vectorize) return cmd_vectorize(vec_args);
  } catch (const capsift::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
