#include "capsift/experiment.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <tuple>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "capsift/embedding.h"
#include "capsift/error.h"
#include "capsift/rng.h"

namespace capsift {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

template <typename T>
T parse_value(std::string_view text, const std::string& source, std::size_t line,
              std::string_view key) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(source, line,
                     "invalid value for '" + std::string(key) + "': '" + std::string(text) + "'");
  }
  return v;
}

AlgorithmSpec& spec_for(ExperimentConfig& cfg, Algorithm a) {
  for (auto& s : cfg.algorithms) {
    if (s.algorithm == a) return s;
  }
  cfg.algorithms.push_back({a, {}, 0});
  return cfg.algorithms.back();
}

}  // namespace

std::optional<TaskSelection> parse_task_selection(std::string_view text) {
  if (text == "three" || text == "three_class") return TaskSelection::ThreeClass;
  if (text == "binary") return TaskSelection::Binary;
  if (text == "both") return TaskSelection::Both;
  return std::nullopt;
}

std::vector<Task> selected_tasks(TaskSelection selection) {
  switch (selection) {
    case TaskSelection::ThreeClass: return {Task::ThreeClass};
    case TaskSelection::Binary: return {Task::Binary};
    case TaskSelection::Both: return {Task::ThreeClass, Task::Binary};
  }
  return {};
}

void ExperimentConfig::validate() const {
  if (manifest.empty()) throw InputError("config: manifest not set");
  if (captions_root.empty()) throw InputError("config: captions not set");
  if (embeddings.empty()) throw InputError("config: at least one embedding is required");
  std::set<std::string> names;
  for (const auto& e : embeddings) {
    if (e.name.empty()) throw InputError("config: embedding with empty name");
    if (!names.insert(e.name).second) throw InputError("config: duplicate embedding " + e.name);
  }
  if (topics.empty()) throw InputError("config: at least one topic is required");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("config: test_fraction must be in (0, 1)");
  }
  if (smote_k == 0) throw InputError("config: smote.k must be >= 1");
  if (algorithms.empty()) throw InputError("config: at least one algorithm is required");
  for (const auto& a : algorithms) {
    if (a.algorithm == Algorithm::DummyMostFrequent) {
      throw InputError("config: the dummy baseline always runs; do not list it");
    }
    a.validate();
  }
  if (top_t.empty()) throw InputError("config: top_t must list at least one value");
  for (std::size_t t : top_t) {
    if (t == 0) throw InputError("config: top_t values must be >= 1");
  }
  if (filter.min_stopword_ratio < 0.0 || filter.min_stopword_ratio > 1.0) {
    throw InputError("config: min_stopword_ratio must be in [0, 1]");
  }
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream out;
  out << "manifest = " << manifest.string() << "\n";
  out << "captions = " << captions_root.string() << "\n";
  for (const auto& e : embeddings) out << "embedding." << e.name << " = " << e.path.string() << "\n";
  out << "topics = ";
  for (std::size_t i = 0; i < topics.size(); ++i) out << (i ? "," : "") << topic_code(topics[i]);
  out << "\n";
  out << "task = "
      << (task == TaskSelection::ThreeClass ? "three"
                                            : task == TaskSelection::Binary ? "binary" : "both")
      << "\n";
  out << "test_fraction = " << format_double(test_fraction) << "\n";
  out << "smote.k = " << smote_k << "\n";
  out << "algorithms = ";
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    out << (i ? "," : "") << algorithm_name(algorithms[i].algorithm);
  }
  out << "\n";
  for (const auto& a : algorithms) {
    Hyperparams merged = default_hyperparams(a.algorithm);
    for (const auto& [k, v] : a.hyperparams) merged[k] = v;
    for (const auto& [k, v] : merged) {
      out << algorithm_name(a.algorithm) << "." << k << " = " << format_double(v) << "\n";
    }
  }
  out << "top_t = ";
  for (std::size_t i = 0; i < top_t.size(); ++i) out << (i ? "," : "") << top_t[i];
  out << "\n";
  out << "seed = " << master_seed << "\n";
  if (stopwords_path) {
    out << "stopwords = " << stopwords_path->string() << "\n";
  } else {
    out << "# stopwords: bundled list\n";
  }
  out << "min_chars = " << filter.min_raw_chars << "\n";
  out << "min_stopword_ratio = " << format_double(filter.min_stopword_ratio) << "\n";
  out << "lowercase_embeddings = " << (lowercase_embedding_keys ? 1 : 0) << "\n";
  out << "out = " << output_dir.string() << "\n";
  return out.str();
}

std::string ExperimentConfig::fingerprint() const {
  std::string text = resolved_text();
  const std::string out_line = "out = " + output_dir.string() + "\n";
  if (const auto pos = text.rfind(out_line); pos != std::string::npos) {
    text.erase(pos, out_line.size());
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              const std::string& source) {
  ExperimentConfig cfg;
  bool algorithms_listed = false;
  std::vector<std::pair<std::string, std::pair<std::string, double>>> overrides;
  std::vector<std::size_t> override_lines;
  const auto resolve = [&](std::string_view p) {
    std::filesystem::path path{std::string(p)};
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line_no, "empty key");

    if (key == "manifest") {
      cfg.manifest = resolve(value);
    } else if (key == "captions") {
      cfg.captions_root = resolve(value);
    } else if (key.starts_with("embedding.")) {
      cfg.embeddings.push_back({key.substr(10), resolve(value)});
    } else if (key == "topics") {
      cfg.topics.clear();
      for (auto t : split_list(value)) {
        const auto topic = parse_topic(t);
        if (!topic) throw ParseError(source, line_no, "unknown topic '" + std::string(t) + "'");
        cfg.topics.push_back(*topic);
      }
    } else if (key == "task") {
      const auto sel = parse_task_selection(value);
      if (!sel) throw ParseError(source, line_no, "task must be three, binary or both");
      cfg.task = *sel;
    } else if (key == "test_fraction") {
      cfg.test_fraction = parse_value<double>(value, source, line_no, key);
    } else if (key == "smote.k") {
      cfg.smote_k = parse_value<std::size_t>(value, source, line_no, key);
    } else if (key == "algorithms") {
      algorithms_listed = true;
      std::vector<AlgorithmSpec> listed;
      for (auto a : split_list(value)) {
        const auto alg = parse_algorithm(a);
        if (!alg) throw ParseError(source, line_no, "unknown algorithm '" + std::string(a) + "'");
        listed.push_back({*alg, {}, 0});
      }
      // Keep overrides given before the list.
      for (auto& s : listed) {
        for (const auto& old : cfg.algorithms) {
          if (old.algorithm == s.algorithm) s.hyperparams = old.hyperparams;
        }
      }
      cfg.algorithms = std::move(listed);
    } else if (key == "top_t") {
      cfg.top_t.clear();
      for (auto t : split_list(value)) {
        cfg.top_t.push_back(parse_value<std::size_t>(t, source, line_no, key));
      }
    } else if (key == "seed") {
      cfg.master_seed = parse_value<std::uint64_t>(value, source, line_no, key);
    } else if (key == "out") {
      cfg.output_dir = resolve(value);
    } else if (key == "stopwords") {
      cfg.stopwords_path = resolve(value);
    } else if (key == "min_chars") {
      cfg.filter.min_raw_chars = parse_value<std::size_t>(value, source, line_no, key);
    } else if (key == "min_stopword_ratio") {
      cfg.filter.min_stopword_ratio = parse_value<double>(value, source, line_no, key);
    } else if (key == "lowercase_embeddings") {
      const auto v = parse_value<int>(value, source, line_no, key);
      if (v != 0 && v != 1) throw ParseError(source, line_no, "lowercase_embeddings must be 0 or 1");
      cfg.lowercase_embedding_keys = v == 1;
    } else if (const auto dot = key.find('.'); dot != std::string::npos) {
      const auto alg = parse_algorithm(key.substr(0, dot));
      if (!alg || *alg == Algorithm::DummyMostFrequent) {
        throw ParseError(source, line_no, "unknown key '" + key + "'");
      }
      const std::string param = key.substr(dot + 1);
      if (!default_hyperparams(*alg).contains(param)) {
        throw ParseError(source, line_no,
                         std::string(algorithm_name(*alg)) + " has no hyperparameter '" + param + "'");
      }
      overrides.push_back({key.substr(0, dot), {param, parse_value<double>(value, source, line_no, key)}});
      override_lines.push_back(line_no);
    } else {
      throw ParseError(source, line_no, "unknown key '" + key + "'");
    }
  }

  if (!algorithms_listed) {
    for (Algorithm a : suite_algorithms()) cfg.algorithms.push_back({a, {}, 0});
  }
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const auto alg = *parse_algorithm(overrides[i].first);
    const bool listed = std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(),
                                    [&](const AlgorithmSpec& s) { return s.algorithm == alg; });
    if (!listed) {
      throw ParseError(source, override_lines[i],
                       "hyperparameter for algorithm '" + overrides[i].first + "' which is not run");
    }
    spec_for(cfg, alg).hyperparams[overrides[i].second.first] = overrides[i].second.second;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(buf.str(), base, path.string());
}

std::vector<Label> binarize_labels(std::span<const Label> labels) {
  std::vector<Label> out;
  out.reserve(labels.size());
  for (Label l : labels) {
    if (l < -1 || l > 1) throw InputError("binarize_labels: label " + std::to_string(l) + " out of range");
    out.push_back(l == 1 ? 1 : 0);
  }
  return out;
}

SplitIndices stratified_split(std::span<const Label> labels, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("stratified_split: test_fraction must be in (0, 1)");
  }
  std::map<Label, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  Rng rng(seed);
  SplitIndices out;
  for (auto& [label, idx] : members) {
    const std::size_t n = idx.size();
    if (n < 2) {
      throw InputError("stratified_split: class " + std::to_string(label) + " has " +
                       std::to_string(n) + " sample(s), need at least 2");
    }
    const auto wanted = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    const std::size_t n_test = std::clamp<std::size_t>(wanted, 1, n - 1);
    rng.shuffle(std::span<std::size_t>(idx));
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

struct TopicDocs {
  std::vector<CaptionDocument> docs;
};

struct Vectorized {
  Matrix features;
  std::vector<Label> labels;
  std::vector<std::string> ids;
};

std::vector<std::string> pick(const std::vector<std::string>& ids,
                              std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ids[i]);
  return out;
}

std::vector<Label> pick(std::span<const Label> labels, std::span<const std::size_t> idx) {
  std::vector<Label> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

/// Returns a reason string when the class distribution cannot support a
/// split that leaves at least 2 training samples per class for SMOTE.
std::optional<std::string> class_size_problem(std::span<const Label> labels) {
  std::map<Label, std::size_t> counts;
  for (Label l : labels) ++counts[l];
  if (counts.size() < 2) return "fewer than two classes after filtering";
  for (const auto& [label, n] : counts) {
    if (n < 3) {
      return "class " + std::to_string(label) + " has " + std::to_string(n) +
             " usable caption(s); need 3 (1 test + 2 train for SMOTE)";
    }
  }
  return std::nullopt;
}

EvaluationReport evaluate_model(const TrainedModel& model, const Matrix& test_x,
                                std::span<const Label> test_y, Task task) {
  EvaluationReport r;
  r.task = task;
  r.seed = model.spec().seed;
  r.model = std::string(algorithm_name(model.spec().algorithm));
  const auto predicted = model.predict(test_x);
  r.confusion = confusion_matrix(test_y, predicted, model.classes());
  r.metrics = classification_metrics(r.confusion);
  if (task == Task::Binary) {
    const Matrix scores = model.predict_scores(test_x);
    const auto pos = std::find(model.classes().begin(), model.classes().end(), 1);
    std::vector<double> s(test_x.rows());
    const auto col = static_cast<std::size_t>(pos - model.classes().begin());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = scores(i, col);
    r.auc_roc = roc_auc_binary(test_y, s);
  }
  return r;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunResult result;
  result.fingerprint = config.fingerprint();

  const auto manifest = load_manifest(config.manifest);
  const StopwordSet stopwords =
      config.stopwords_path ? load_stopwords(*config.stopwords_path) : default_stopwords();
  if (!std::filesystem::is_directory(config.captions_root)) {
    throw Error("captions root '" + config.captions_root.string() + "' is not a directory");
  }

  std::vector<EmbeddingTable> tables;
  for (const auto& source : config.embeddings) {
    EmbeddingParseOptions opts;
    opts.name = source.name;
    opts.lowercase_keys = config.lowercase_embedding_keys;
    tables.push_back(parse_embedding_file(source.path, opts));
  }

  const auto tasks = selected_tasks(config.task);

  for (Topic topic : config.topics) {
    const std::string topic_name(topic_code(topic));
    const auto records = filter_by_topic(manifest, topic);
    if (records.empty()) {
      result.failures.push_back({topic_name, "", "", "topic skipped: no manifest rows"});
      continue;
    }

    std::vector<CaptionDocument> docs;
    for (const auto& record : records) {
      auto loaded = load_caption(record, config.captions_root);
      if (loaded.skipped()) {
        result.exclusions.push_back({topic_name, "", record.video_id, loaded.skip_reason});
        continue;
      }
      docs.push_back(make_document(record, std::move(*loaded.text), stopwords));
    }
    auto filtered = filter_corpus(std::move(docs), config.filter);
    for (auto& rej : filtered.rejections) {
      result.exclusions.push_back({topic_name, "", rej.video_id, rej.reason});
    }

    std::vector<EvaluationReport> topic_reports;
    for (const auto& table : tables) {
      Vectorized data;
      data.features = Matrix(0, table.dimension());
      for (const auto& doc : filtered.retained) {
        const auto cv = vectorize_caption(table, doc.tokens);
        if (!cv.vector) {
          result.exclusions.push_back({topic_name, table.name(), doc.record.video_id,
                                       "no in-vocabulary tokens (coverage 0)"});
          continue;
        }
        data.features.append_row(*cv.vector);
        data.labels.push_back(to_label(doc.record.label));
        data.ids.push_back(doc.record.video_id);
      }
      if (const auto problem = class_size_problem(data.labels)) {
        result.failures.push_back({topic_name, table.name(), "", "skipped: " + *problem});
        continue;
      }
      if (const auto problem = class_size_problem(binarize_labels(data.labels));
          problem && config.task != TaskSelection::ThreeClass) {
        result.failures.push_back({topic_name, table.name(), "", "skipped: binary " + *problem});
        continue;
      }

      // One split per (topic, embedding), shared by both tasks.
      const auto split = stratified_split(
          data.labels, config.test_fraction,
          derive_seed(config.master_seed, {topic_name, table.name(), "split"}));
      SplitRecord record{topic_name, table.name(), pick(data.ids, split.train),
                         pick(data.ids, split.test), {}};
      const Matrix train_x = data.features.select_rows(split.train);
      const Matrix test_x = data.features.select_rows(split.test);

      for (Task task : tasks) {
        const std::string task_label(task_name(task));
        const std::vector<Label> labels =
            task == Task::Binary ? binarize_labels(data.labels) : data.labels;
        const auto train_y = pick(labels, split.train);
        const auto test_y = pick(labels, split.test);

        SmoteParams smote_params{config.smote_k,
                                 derive_seed(config.master_seed,
                                             {topic_name, task_label, table.name(), "smote"})};
        const auto balanced = smote(train_x, train_y, smote_params);
        record.smote_input_ids[task] = record.train_ids;

        std::vector<AlgorithmSpec> specs = config.algorithms;
        specs.push_back({Algorithm::DummyMostFrequent, {}, 0});
        for (auto& spec : specs) {
          const std::string model_name(algorithm_name(spec.algorithm));
          spec.seed = derive_seed(config.master_seed,
                                  {topic_name, task_label, table.name(), model_name});
          try {
            const auto model = train(spec, balanced.features, balanced.labels);
            auto report = evaluate_model(model, test_x, test_y, task);
            report.topic = topic_name;
            report.embedding = table.name();
            topic_reports.push_back(std::move(report));
          } catch (const Error& e) {
            result.failures.push_back({topic_name, table.name(), "",
                                       task_label + " " + model_name + " failed: " + e.what()});
          }
        }
      }
      result.splits.push_back(std::move(record));
    }

    // Top-T embedding scores and best model, dummy excluded from both.
    const std::string dummy_name(algorithm_name(Algorithm::DummyMostFrequent));
    for (Task task : tasks) {
      std::map<std::string, std::vector<EvaluationReport>> groups;
      for (const auto& r : topic_reports) {
        if (r.task == task && r.model != dummy_name) groups[r.embedding].push_back(r);
      }
      if (groups.empty()) continue;
      for (std::size_t t : config.top_t) {
        for (auto& score : embedding_performance(groups, t)) {
          result.embedding_scores.push_back({topic_name, task, std::move(score)});
        }
      }
      const EvaluationReport* best = nullptr;
      for (const auto& [name, reports] : groups) {
        for (const auto& r : reports) {
          if (!best || r.metrics.f1_weighted > best->metrics.f1_weighted ||
              (r.metrics.f1_weighted == best->metrics.f1_weighted &&
               std::tie(r.model, r.embedding) < std::tie(best->model, best->embedding))) {
            best = &r;
          }
        }
      }
      BestModel bm{topic_name, task, *best, std::nullopt};
      for (const auto& r : topic_reports) {
        if (r.task == task && r.model == dummy_name && r.embedding == best->embedding) bm.dummy = r;
      }
      result.best_models.push_back(std::move(bm));
    }

    for (auto& r : topic_reports) result.reports.push_back(std::move(r));
  }

  const auto key = [](const EvaluationReport& r) {
    return std::make_tuple(r.topic, static_cast<int>(r.task), r.embedding, r.model);
  };
  std::sort(result.reports.begin(), result.reports.end(),
            [&](const auto& a, const auto& b) { return key(a) < key(b); });
  const auto score_key = [](const TaskEmbeddingScore& s) {
    return std::make_tuple(s.topic, static_cast<int>(s.task), s.score.embedding, s.score.t);
  };
  std::sort(result.embedding_scores.begin(), result.embedding_scores.end(),
            [&](const auto& a, const auto& b) { return score_key(a) < score_key(b); });
  return result;
}

}  // namespace capsift
