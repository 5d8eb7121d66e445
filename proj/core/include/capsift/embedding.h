#pragma once

// Pretrained word-embedding tables (GloVe text and word2vec text formats)
// and caption vectorization by averaging token vectors.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace capsift {

class EmbeddingParser;

enum class EmbeddingFormat { GloveText, Word2VecText };

std::string_view format_name(EmbeddingFormat format);

/// Immutable word -> vector map. Vectors are stored contiguously as float,
/// the precision pretrained embedding files are distributed in.
class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, std::size_t dimension, EmbeddingFormat format);

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return dimension_; }
  EmbeddingFormat source_format() const noexcept { return format_; }
  std::size_t size() const noexcept { return words_.size(); }

  /// Words in file order.
  const std::vector<std::string>& words() const noexcept { return words_; }

  /// Exact-match lookup. A miss is an ordinary result.
  std::optional<std::span<const float>> lookup(std::string_view word) const;

  std::optional<std::size_t> index_of(std::string_view word) const;

  std::span<const float> vector_at(std::size_t index) const {
    return {values_.data() + index * dimension_, dimension_};
  }

  /// Adds a word; returns false (and leaves the table unchanged) if the word
  /// is already present. Throws InputError on a wrong-sized or non-finite
  /// vector or an empty word.
  bool add(std::string word, std::span<const float> vector);

  /// Entries skipped during parsing because their word was already present.
  std::size_t duplicates_skipped() const noexcept { return duplicates_skipped_; }

 private:
  friend class EmbeddingParser;

  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::string name_;
  std::size_t dimension_;
  EmbeddingFormat format_;
  std::vector<std::string> words_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::size_t duplicates_skipped_ = 0;
};

struct EmbeddingParseOptions {
  std::optional<std::size_t> expected_dim;
  /// Lowercase keys on load; on collision the first occurrence wins.
  bool lowercase_keys = false;
  /// Table name; defaults to the file stem.
  std::string name;
};

/// Parses a GloVe-text or word2vec-text file. The format is detected from
/// the first line: exactly two integers means a word2vec header
/// `<vocab_size> <dim>`. Every failure is a ParseError naming the line.
EmbeddingTable parse_embedding_file(const std::filesystem::path& path,
                                    const EmbeddingParseOptions& options = {});

EmbeddingTable parse_embedding_text(std::string_view text, const std::string& source,
                                    std::optional<std::size_t> expected_dim = std::nullopt,
                                    bool lowercase_keys = false);

/// Writes the table in the given format with shortest round-trip float text,
/// so parsing the output reproduces every component bit for bit.
void write_embedding_file(const EmbeddingTable& table, const std::filesystem::path& path,
                          EmbeddingFormat format);
std::string format_embedding_text(const EmbeddingTable& table, EmbeddingFormat format);

struct CaptionVector {
  /// Mean of the in-vocabulary token vectors; absent when no token hit.
  std::optional<std::vector<double>> vector;
  std::size_t tokens_total = 0;
  std::size_t tokens_in_vocab = 0;

  double coverage() const noexcept {
    return tokens_total == 0 ? 0.0
                             : static_cast<double>(tokens_in_vocab) /
                                   static_cast<double>(tokens_total);
  }
};

/// Averages the vectors of every in-vocabulary token occurrence, so a word
/// occurring twice weighs twice. OOV tokens are skipped and counted.
CaptionVector vectorize_caption(const EmbeddingTable& table,
                                std::span<const std::string> tokens);

}  // namespace capsift
