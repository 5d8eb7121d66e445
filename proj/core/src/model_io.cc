// Flat text model format, one record per line:
//
//   capsift-model 1
//   algorithm <name>
//   seed <u64>
//   hyperparam <key> <value>          (zero or more)
//   classes <n> <label>...
//   dimension <d>
//   <array-name> <count> <value>...   (scaler and algorithm state)
//   end
//
// Floats use shortest round-trip text so reloading is exact.

#include <charconv>
#include <map>
#include <sstream>

#include "capsift/classifiers.h"
#include "capsift/error.h"

namespace capsift {

namespace {

constexpr std::string_view kMagic = "capsift-model";
constexpr int kVersion = 1;

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Writer {
 public:
  void line(std::string_view key, const std::string& rest) {
    out_ << key << ' ' << rest << '\n';
  }
  void array(std::string_view key, std::span<const double> values) {
    out_ << key << ' ' << values.size();
    for (double v : values) out_ << ' ' << number(v);
    out_ << '\n';
  }
  template <typename Int>
  void ints(std::string_view key, std::span<const Int> values) {
    out_ << key << ' ' << values.size();
    for (Int v : values) out_ << ' ' << v;
    out_ << '\n';
  }
  void matrix(std::string_view key, const Matrix& m) {
    out_ << key << ".shape 2 " << m.rows() << ' ' << m.cols() << '\n';
    array(std::string(key) + ".data", m.data());
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

class Reader {
 public:
  explicit Reader(std::string_view text) {
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      std::istringstream ls{std::string(text.substr(start, end - start))};
      Record r{line_no, {}};
      std::string field;
      while (ls >> field) r.fields.push_back(field);
      if (!r.fields.empty()) {
        const std::string key = r.fields.front();
        if (key == "hyperparam") {
          hyperparams_.push_back(r);
        } else if (!records_.emplace(key, r).second) {
          throw ParseError("model", line_no, "duplicate record '" + key + "'");
        }
        order_.push_back(key);
      }
      start = end + 1;
    }
  }

  const std::vector<std::string>& order() const { return order_; }
  const std::vector<Record>& hyperparams() const { return hyperparams_; }
  bool has(const std::string& key) const { return records_.contains(key); }

  const Record& get(const std::string& key) const {
    const auto it = records_.find(key);
    if (it == records_.end()) throw ParseError("model", 0, "missing record '" + key + "'");
    return it->second;
  }

  std::string scalar(const std::string& key) const {
    const Record& r = get(key);
    if (r.fields.size() != 2) throw ParseError("model", r.line, "expected one value for " + key);
    return r.fields[1];
  }

  template <typename T>
  std::vector<T> values(const std::string& key) const {
    const Record& r = get(key);
    if (r.fields.size() < 2) throw ParseError("model", r.line, "missing count for " + key);
    const std::size_t count = parse<std::size_t>(r.fields[1], r.line);
    if (r.fields.size() != count + 2) {
      throw ParseError("model", r.line, "count mismatch for " + key);
    }
    std::vector<T> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(parse<T>(r.fields[i + 2], r.line));
    return out;
  }

  Matrix matrix(const std::string& key) const {
    const auto shape = values<std::size_t>(key + ".shape");
    if (shape.size() != 2) throw ParseError("model", get(key + ".shape").line, "bad shape");
    const auto data = values<double>(key + ".data");
    if (data.size() != shape[0] * shape[1]) {
      throw ParseError("model", get(key + ".data").line, "data size does not match shape");
    }
    Matrix m(shape[0], shape[1]);
    for (std::size_t i = 0; i < shape[0]; ++i) {
      for (std::size_t j = 0; j < shape[1]; ++j) m(i, j) = data[i * shape[1] + j];
    }
    return m;
  }

  template <typename T>
  static T parse(const std::string& s, std::size_t line) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("model", line, "bad number '" + s + "'");
    }
    return v;
  }

 private:
  std::map<std::string, Record> records_;
  std::vector<Record> hyperparams_;
  std::vector<std::string> order_;
};

}  // namespace

std::string serialize_model(const TrainedModel& model) {
  Writer w;
  w.line(kMagic, std::to_string(kVersion));
  w.line("algorithm", std::string(algorithm_name(model.spec().algorithm)));
  w.line("seed", std::to_string(model.spec().seed));
  for (const auto& [key, value] : model.spec().hyperparams) w.line("hyperparam", key + " " + number(value));
  w.ints<Label>("classes", model.classes());
  w.line("dimension", std::to_string(model.dimension()));
  if (model.scaler()) {
    w.array("scaler.mean", model.scaler()->mean);
    w.array("scaler.std", model.scaler()->std);
  }
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          w.line("knn.k", std::to_string(s.k));
          w.matrix("knn.points", s.points);
          w.ints<std::size_t>("knn.class_index", s.class_index);
        } else if constexpr (std::is_same_v<T, CentroidState>) {
          w.matrix("centroid.centroids", s.centroids);
        } else if constexpr (std::is_same_v<T, LinearState>) {
          w.matrix("linear.weights", s.weights);
          w.array("linear.bias", s.bias);
          w.array("linear.loss_history", s.loss_history);
        } else if constexpr (std::is_same_v<T, GaussianNbState>) {
          w.matrix("gnb.means", s.means);
          w.matrix("gnb.variances", s.variances);
          w.array("gnb.log_priors", s.log_priors);
        } else if constexpr (std::is_same_v<T, ForestState>) {
          w.line("forest.trees", std::to_string(s.trees.size()));
          for (std::size_t t = 0; t < s.trees.size(); ++t) {
            // Five values per node: feature threshold left right leaf_class.
            std::vector<double> flat;
            for (const auto& n : s.trees[t].nodes()) {
              flat.insert(flat.end(), {static_cast<double>(n.feature), n.threshold,
                                       static_cast<double>(n.left),
                                       static_cast<double>(n.right),
                                       static_cast<double>(n.leaf_class)});
            }
            w.array("forest.tree." + std::to_string(t), flat);
          }
        } else {
          w.line("dummy.class_index", std::to_string(s.class_index));
        }
      },
      model.state());
  w.line("end", "model");
  return w.str();
}

TrainedModel deserialize_model(std::string_view text) {
  const Reader r(text);
  if (r.order().empty() || r.order().front() != kMagic) {
    throw ParseError("model", 1, "not a capsift model");
  }
  if (Reader::parse<int>(r.scalar(std::string(kMagic)), 1) != kVersion) {
    throw ParseError("model", 1, "unsupported model version");
  }
  if (r.order().back() != "end") throw ParseError("model", 0, "truncated model (no end record)");

  AlgorithmSpec spec;
  const auto algorithm = parse_algorithm(r.scalar("algorithm"));
  if (!algorithm) throw ParseError("model", r.get("algorithm").line, "unknown algorithm");
  spec.algorithm = *algorithm;
  spec.seed = Reader::parse<std::uint64_t>(r.scalar("seed"), r.get("seed").line);
  for (const auto& h : r.hyperparams()) {
    if (h.fields.size() != 3) throw ParseError("model", h.line, "hyperparam needs key and value");
    spec.hyperparams[h.fields[1]] = Reader::parse<double>(h.fields[2], h.line);
  }
  spec.validate();

  auto classes = r.values<Label>("classes");
  const auto dimension =
      Reader::parse<std::size_t>(r.scalar("dimension"), r.get("dimension").line);

  std::optional<Scaler> scaler;
  if (r.has("scaler.mean")) {
    scaler = Scaler{r.values<double>("scaler.mean"), r.values<double>("scaler.std")};
    if (scaler->mean.size() != dimension || scaler->std.size() != dimension) {
      throw ParseError("model", r.get("scaler.mean").line, "scaler dimension mismatch");
    }
  }

  TrainedModel::State state;
  switch (spec.algorithm) {
    case Algorithm::Knn:
      state = KnnState{r.matrix("knn.points"), r.values<std::size_t>("knn.class_index"),
                       Reader::parse<std::size_t>(r.scalar("knn.k"), r.get("knn.k").line)};
      break;
    case Algorithm::NearestCentroid:
      state = CentroidState{r.matrix("centroid.centroids")};
      break;
    case Algorithm::LogisticRegression:
    case Algorithm::LinearSvmOvr:
      state = LinearState{r.matrix("linear.weights"), r.values<double>("linear.bias"),
                          r.values<double>("linear.loss_history")};
      break;
    case Algorithm::GaussianNaiveBayes:
      state = GaussianNbState{r.matrix("gnb.means"), r.matrix("gnb.variances"),
                              r.values<double>("gnb.log_priors")};
      break;
    case Algorithm::RandomForest: {
      const auto n = Reader::parse<std::size_t>(r.scalar("forest.trees"),
                                                r.get("forest.trees").line);
      ForestState s;
      for (std::size_t t = 0; t < n; ++t) {
        const std::string key = "forest.tree." + std::to_string(t);
        const auto flat = r.values<double>(key);
        if (flat.size() % 5 != 0) throw ParseError("model", r.get(key).line, "bad tree record");
        std::vector<CartTree::Node> nodes(flat.size() / 5);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          nodes[i].feature = static_cast<std::int32_t>(flat[5 * i]);
          nodes[i].threshold = flat[5 * i + 1];
          nodes[i].left = static_cast<std::uint32_t>(flat[5 * i + 2]);
          nodes[i].right = static_cast<std::uint32_t>(flat[5 * i + 3]);
          nodes[i].leaf_class = static_cast<std::uint32_t>(flat[5 * i + 4]);
          if (nodes[i].leaf_class >= classes.size()) {
            throw ParseError("model", r.get(key).line, "leaf class out of range");
          }
        }
        s.trees.push_back(CartTree::from_nodes(std::move(nodes)));
      }
      state = std::move(s);
      break;
    }
    case Algorithm::DummyMostFrequent: {
      const auto idx = Reader::parse<std::size_t>(r.scalar("dummy.class_index"),
                                                  r.get("dummy.class_index").line);
      if (idx >= classes.size()) throw ParseError("model", 0, "dummy class out of range");
      state = DummyState{idx};
      break;
    }
  }
  return TrainedModel(std::move(spec), std::move(classes), dimension, std::move(scaler),
                      std::move(state));
}

}  // namespace capsift
