#include "capsift/embedding.h"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <unordered_map>

#include "capsift/error.h"
#include "test_support.h"

namespace capsift {
namespace {

using testing::scratch_dir;
using testing::write_text;

EmbeddingTable tiny() {
  return parse_embedding_text("2 3\napple 1 0 0\npear 0 1 0\n", "tiny");
}

EmbeddingTable random_table(std::size_t words, std::size_t dim, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  EmbeddingTable t("random", dim, EmbeddingFormat::GloveText);
  std::vector<float> v(dim);
  for (std::size_t i = 0; t.size() < words; ++i) {
    for (float& x : v) x = normal(gen) * std::pow(10.0f, static_cast<float>(gen() % 7) - 3.0f);
    t.add("w" + std::to_string(gen() % 100000) + "_" + std::to_string(i), v);
  }
  return t;
}

void expect_bit_identical(const EmbeddingTable& a, const EmbeddingTable& b) {
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.dimension(), b.dimension());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.words()[i], b.words()[i]);
    const auto va = a.vector_at(i);
    const auto vb = b.vector_at(i);
    for (std::size_t k = 0; k < va.size(); ++k) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(va[k]), std::bit_cast<std::uint32_t>(vb[k]))
          << a.words()[i] << "[" << k << "]";
    }
  }
}

TEST(Parse, MinimalWord2VecFile) {
  const auto t = tiny();
  EXPECT_EQ(t.source_format(), EmbeddingFormat::Word2VecText);
  EXPECT_EQ(t.dimension(), 3u);
  EXPECT_EQ(t.size(), 2u);
}

TEST(Parse, GloveDimensionDriftIsLocated) {
  try {
    parse_embedding_text("king 0.5 0.5\nqueen 0.1 0.2 0.3\n", "g.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos);
  }
}

TEST(Parse, MalformedInputsAreLocated) {
  const auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_embedding_text(text, "f");
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("a 1 2\nb 1 x2\n"), 2u);          // bad float
  EXPECT_EQ(line_of("a 1 2\nb 1 nan\n"), 2u);         // non-finite
  EXPECT_EQ(line_of("3 2\na 1 2\nb 1 2\n"), 1u);      // header count too high
  EXPECT_EQ(line_of("1 2\na 1 2\nb 1 2\n"), 1u);      // header count too low
  EXPECT_EQ(line_of("2 3\na 1 2\nb 1 2\n"), 2u);      // header dim disagrees
  EXPECT_EQ(line_of(""), 1u);                          // empty file
  EXPECT_EQ(line_of("lonely\n"), 1u);                  // word without vector
  EXPECT_THROW(parse_embedding_text("a 1 2 3\n", "f", 4), ParseError);
}

TEST(Parse, ScientificNotationAndExpectedDim) {
  const auto t = parse_embedding_text("x 1e-3 -2.5E+2 +4\n", "f", 3);
  EXPECT_EQ(t.source_format(), EmbeddingFormat::GloveText);
  const auto v = *t.lookup("x");
  EXPECT_FLOAT_EQ(v[0], 1e-3f);
  EXPECT_FLOAT_EQ(v[1], -250.0f);
  EXPECT_FLOAT_EQ(v[2], 4.0f);
}

TEST(Parse, GloveLineOfTwoIntegersIsAHeaderOnlyOnLineOne) {
  // A one-dimensional GloVe file whose first word is numeric would look like a
  // header; later lines of that shape are data.
  const auto t = parse_embedding_text("a 1\n7 2\n", "f");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_TRUE(t.lookup("7").has_value());
}

TEST(Parse, LowercaseKeysKeepsFirstOnCollision) {
  const auto t = parse_embedding_text("Apple 1 1\napple 2 2\nPEAR 3 3\n", "f", std::nullopt, true);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.duplicates_skipped(), 1u);
  EXPECT_EQ((*t.lookup("apple"))[0], 1.0f);
  EXPECT_TRUE(t.lookup("pear").has_value());
  EXPECT_FALSE(t.lookup("Apple").has_value());
  const auto cased = parse_embedding_text("Apple 1 1\napple 2 2\n", "f");
  EXPECT_EQ(cased.size(), 2u);
}

TEST(Parse, CrlfAndTrailingSpaces) {
  const auto t = parse_embedding_text("2 2\r\na 1 2 \r\nb 3 4\r\n", "f");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ((*t.lookup("b"))[1], 4.0f);
}

TEST(Parse, FiftyWordRandomTableRoundTripsThroughDisk) {
  const auto dir = scratch_dir("embed-roundtrip");
  const auto table = random_table(50, 7, 3);
  for (auto format : {EmbeddingFormat::GloveText, EmbeddingFormat::Word2VecText}) {
    const auto path = dir / "t.txt";
    write_embedding_file(table, path, format);
    const auto back = parse_embedding_file(path);
    EXPECT_EQ(back.source_format(), format);
    EXPECT_EQ(back.name(), "t");
    expect_bit_identical(table, back);
  }
}

TEST(Parse, MissingFile) {
  EXPECT_THROW(parse_embedding_file("/nonexistent/vectors.txt"), Error);
}

TEST(Lookup, HitsAndMisses) {
  const auto t = tiny();
  const auto apple = t.lookup("apple");
  ASSERT_TRUE(apple.has_value());
  EXPECT_EQ(std::vector<float>(apple->begin(), apple->end()), (std::vector<float>{1, 0, 0}));
  EXPECT_FALSE(t.lookup("zzzqx").has_value());
  EXPECT_FALSE(t.lookup("").has_value());
}

TEST(Lookup, AgreesWithShadowMapOracle) {
  const auto t = random_table(400, 4, 17);
  std::unordered_map<std::string, std::vector<float>> shadow;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = t.vector_at(i);
    shadow[t.words()[i]] = std::vector<float>(v.begin(), v.end());
  }
  std::mt19937 gen(4);
  for (int q = 0; q < 1000; ++q) {
    const std::string key = (gen() % 2) ? t.words()[gen() % t.size()]
                                        : "absent" + std::to_string(gen() % 5000);
    const auto got = t.lookup(key);
    const auto it = shadow.find(key);
    ASSERT_EQ(got.has_value(), it != shadow.end()) << key;
    if (got) ASSERT_EQ(std::vector<float>(got->begin(), got->end()), it->second);
  }
}

TEST(Table, AddRejectsBadVectors) {
  EmbeddingTable t("t", 2, EmbeddingFormat::GloveText);
  const std::vector<float> three = {1, 2, 3};
  const std::vector<float> inf = {1, INFINITY};
  const std::vector<float> ok = {1, 2};
  EXPECT_THROW(t.add("a", three), InputError);
  EXPECT_THROW(t.add("a", inf), InputError);
  EXPECT_THROW(t.add("", ok), InputError);
  EXPECT_TRUE(t.add("a", ok));
  EXPECT_FALSE(t.add("a", ok));
  EXPECT_THROW(EmbeddingTable("z", 0, EmbeddingFormat::GloveText), InputError);
}

std::vector<double> as_vec(const CaptionVector& cv) { return *cv.vector; }

TEST(Vectorize, SingleTokenIsItsOwnVector) {
  const auto cv = vectorize_caption(tiny(), std::vector<std::string>{"apple"});
  EXPECT_EQ(as_vec(cv), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(cv.coverage(), 1.0);
}

TEST(Vectorize, TwoPointMean) {
  const auto cv = vectorize_caption(tiny(), std::vector<std::string>{"apple", "pear"});
  EXPECT_EQ(as_vec(cv), (std::vector<double>{0.5, 0.5, 0}));
}

TEST(Vectorize, FrequencyWeighting) {
  const auto cv = vectorize_caption(tiny(), std::vector<std::string>{"apple", "apple", "pear"});
  EXPECT_DOUBLE_EQ(as_vec(cv)[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(as_vec(cv)[1], 1.0 / 3.0);
  EXPECT_EQ(as_vec(cv)[2], 0.0);
  EXPECT_EQ(cv.coverage(), 1.0);
}

TEST(Vectorize, NoHitsMeansNoVector) {
  const auto cv = vectorize_caption(tiny(), std::vector<std::string>{"zz", "qq"});
  EXPECT_FALSE(cv.vector.has_value());
  EXPECT_EQ(cv.tokens_total, 2u);
  EXPECT_EQ(cv.coverage(), 0.0);
  const auto empty = vectorize_caption(tiny(), std::vector<std::string>{});
  EXPECT_FALSE(empty.vector.has_value());
  EXPECT_EQ(empty.coverage(), 0.0);
}

TEST(Vectorize, TwentyTokensFiveOovAgainstSumDivideOracle) {
  const auto t = random_table(10, 6, 21);
  std::vector<std::string> tokens;
  for (int i = 0; i < 15; ++i) tokens.push_back(t.words()[(i * 7) % 10]);
  for (int i = 0; i < 5; ++i) tokens.insert(tokens.begin() + 3 * i, "oov" + std::to_string(i));
  ASSERT_EQ(tokens.size(), 20u);

  std::vector<double> oracle(6, 0.0);
  int hits = 0;
  for (const auto& tok : tokens) {
    for (std::size_t w = 0; w < t.size(); ++w) {
      if (t.words()[w] != tok) continue;
      for (std::size_t k = 0; k < 6; ++k) oracle[k] += t.vector_at(w)[k];
      ++hits;
    }
  }
  ASSERT_EQ(hits, 15);
  for (double& x : oracle) x /= hits;

  const auto cv = vectorize_caption(t, tokens);
  EXPECT_EQ(cv.tokens_in_vocab, 15u);
  EXPECT_DOUBLE_EQ(cv.coverage(), 0.75);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(as_vec(cv)[k], oracle[k], 1e-12);
}

TEST(Vectorize, PropertyConvexHullAndPermutationInvariance) {
  const auto t = random_table(60, 5, 33);
  std::mt19937 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> tokens;
    const std::size_t n = 1 + gen() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      tokens.push_back(gen() % 5 == 0 ? "oov" : t.words()[gen() % t.size()]);
    }
    const auto cv = vectorize_caption(t, tokens);
    if (!cv.vector) continue;
    for (std::size_t k = 0; k < 5; ++k) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& tok : tokens) {
        if (const auto v = t.lookup(tok)) {
          lo = std::min(lo, static_cast<double>((*v)[k]));
          hi = std::max(hi, static_cast<double>((*v)[k]));
        }
      }
      const double slack = 1e-12 * std::max(1.0, std::abs(hi) + std::abs(lo));
      ASSERT_GE((*cv.vector)[k], lo - slack);
      ASSERT_LE((*cv.vector)[k], hi + slack);
    }
    auto shuffled = tokens;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    ASSERT_EQ(vectorize_caption(t, shuffled).vector, cv.vector);
  }
}

TEST(Fixture, BundledEmbeddingsParse) {
  const auto glove = parse_embedding_file(testing::fixture_dir() / "corpus" / "glove16.txt");
  EXPECT_EQ(glove.dimension(), 16u);
  EXPECT_EQ(glove.source_format(), EmbeddingFormat::GloveText);
  const auto w2v = parse_embedding_file(testing::fixture_dir() / "corpus" / "w2v12.txt");
  EXPECT_EQ(w2v.dimension(), 12u);
  EXPECT_EQ(w2v.source_format(), EmbeddingFormat::Word2VecText);
}

}  // namespace
}  // namespace capsift
