#include "capsift/embedding.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "capsift/error.h"

namespace capsift {

std::string_view format_name(EmbeddingFormat format) {
  return format == EmbeddingFormat::GloveText ? "glove-text" : "word2vec-text";
}

EmbeddingTable::EmbeddingTable(std::string name, std::size_t dimension, EmbeddingFormat format)
    : name_(std::move(name)), dimension_(dimension), format_(format) {
  if (dimension_ == 0) throw InputError("embedding dimension must be positive");
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const float>> EmbeddingTable::lookup(std::string_view word) const {
  const auto index = index_of(word);
  if (!index) return std::nullopt;
  return vector_at(*index);
}

bool EmbeddingTable::add(std::string word, std::span<const float> vector) {
  if (word.empty()) throw InputError("embedding word must be nonempty");
  if (vector.size() != dimension_) {
    throw InputError("vector for '" + word + "' has " + std::to_string(vector.size()) +
                     " components, table dimension is " + std::to_string(dimension_));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) throw InputError("non-finite component in vector for '" + word + "'");
  }
  if (index_.contains(word)) return false;
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

namespace {

void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

/// Line-at-a-time parser shared by the file and in-memory entry points.
class EmbeddingParser {
 public:
  EmbeddingParser(std::string source, std::string name, std::optional<std::size_t> expected_dim,
                  bool lowercase_keys)
      : source_(std::move(source)),
        name_(std::move(name)),
        expected_dim_(expected_dim),
        lowercase_keys_(lowercase_keys) {}

  void consume(std::string_view line) {
    ++line_no_;
    split_fields(line, fields_);
    if (line_no_ == 1) {
      std::size_t vocab = 0;
      std::size_t dim = 0;
      if (fields_.size() == 2 && parse_number(fields_[0], vocab) && parse_number(fields_[1], dim)) {
        if (dim == 0) throw ParseError(source_, line_no_, "word2vec header declares dimension 0");
        format_ = EmbeddingFormat::Word2VecText;
        header_count_ = vocab;
        header_dim_ = dim;
        check_expected(dim);
        return;
      }
    }
    if (fields_.empty()) return;
    if (fields_.size() < 2) {
      throw ParseError(source_, line_no_, "expected a word followed by vector components");
    }
    const std::size_t dim = fields_.size() - 1;
    if (!table_) {
      if (header_dim_ && *header_dim_ != dim) {
        throw ParseError(source_, line_no_,
                         "dimension mismatch: header declares " + std::to_string(*header_dim_) +
                             ", line has " + std::to_string(dim));
      }
      check_expected(dim);
      table_.emplace(name_, dim, format_);
      scratch_.resize(dim);
    } else if (dim != table_->dimension()) {
      throw ParseError(source_, line_no_,
                       "dimension mismatch: expected " + std::to_string(table_->dimension()) +
                           " components, found " + std::to_string(dim));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      float v = 0.0f;
      if (!parse_number(fields_[k + 1], v)) {
        throw ParseError(source_, line_no_,
                         "component " + std::to_string(k + 1) + " is not a number: '" +
                             std::string(fields_[k + 1]) + "'");
      }
      if (!std::isfinite(v)) {
        throw ParseError(source_, line_no_,
                         "component " + std::to_string(k + 1) + " is not finite");
      }
      scratch_[k] = v;
    }
    ++data_lines_;
    std::string word = lowercase_keys_ ? lowercase(fields_[0]) : std::string(fields_[0]);
    if (!table_->add(std::move(word), scratch_)) ++table_->duplicates_skipped_;
  }

  EmbeddingTable finish() {
    if (line_no_ == 0) throw ParseError(source_, 1, "empty embedding file");
    if (header_count_ && *header_count_ != data_lines_) {
      throw ParseError(source_, 1,
                       "word2vec header declares " + std::to_string(*header_count_) +
                           " words, file has " + std::to_string(data_lines_));
    }
    if (!table_) {
      if (header_dim_) return EmbeddingTable(name_, *header_dim_, format_);
      throw ParseError(source_, line_no_, "embedding file has no vectors");
    }
    return std::move(*table_);
  }

 private:
  void check_expected(std::size_t dim) const {
    if (expected_dim_ && *expected_dim_ != dim) {
      throw ParseError(source_, line_no_,
                       "dimension mismatch: expected " + std::to_string(*expected_dim_) +
                           ", file has " + std::to_string(dim));
    }
  }

  std::string source_;
  std::string name_;
  std::optional<std::size_t> expected_dim_;
  bool lowercase_keys_;
  EmbeddingFormat format_ = EmbeddingFormat::GloveText;
  std::optional<std::size_t> header_count_;
  std::optional<std::size_t> header_dim_;
  std::optional<EmbeddingTable> table_;
  std::vector<std::string_view> fields_;
  std::vector<float> scratch_;
  std::size_t line_no_ = 0;
  std::size_t data_lines_ = 0;
};

EmbeddingTable parse_embedding_text(std::string_view text, const std::string& source,
                                    std::optional<std::size_t> expected_dim,
                                    bool lowercase_keys) {
  EmbeddingParser parser(source, source, expected_dim, lowercase_keys);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    parser.consume(text.substr(start, end - start));
    start = end + 1;
  }
  return parser.finish();
}

EmbeddingTable parse_embedding_file(const std::filesystem::path& path,
                                    const EmbeddingParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file '" + path.string() + "'");
  const std::string name = options.name.empty() ? path.stem().string() : options.name;
  EmbeddingParser parser(path.string(), name, options.expected_dim, options.lowercase_keys);
  std::string line;
  while (std::getline(in, line)) parser.consume(line);
  return parser.finish();
}

std::string format_embedding_text(const EmbeddingTable& table, EmbeddingFormat format) {
  std::string out;
  if (format == EmbeddingFormat::Word2VecText) {
    out += std::to_string(table.size()) + " " + std::to_string(table.dimension()) + "\n";
  }
  char buf[64];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.words()[i];
    for (float v : table.vector_at(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.push_back(' ');
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void write_embedding_file(const EmbeddingTable& table, const std::filesystem::path& path,
                          EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embedding file '" + path.string() + "'");
  out << format_embedding_text(table, format);
  if (!out) throw Error("failed writing embedding file '" + path.string() + "'");
}

CaptionVector vectorize_caption(const EmbeddingTable& table,
                                std::span<const std::string> tokens) {
  CaptionVector out;
  out.tokens_total = tokens.size();
  // Occurrence counts keyed by vocabulary index; summing in index order makes
  // the result independent of token order, bit for bit.
  std::map<std::size_t, std::size_t> counts;
  for (const auto& t : tokens) {
    const auto index = table.index_of(t);
    if (!index) continue;
    ++out.tokens_in_vocab;
    ++counts[*index];
  }
  if (out.tokens_in_vocab == 0) return out;
  std::vector<double> mean(table.dimension(), 0.0);
  for (const auto& [index, count] : counts) {
    const auto vec = table.vector_at(index);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] += static_cast<double>(count) * static_cast<double>(vec[k]);
    }
  }
  const double n = static_cast<double>(out.tokens_in_vocab);
  for (double& m : mean) m /= n;
  out.vector = std::move(mean);
  return out;
}

}  // namespace capsift
