#include <random>

#include "gtest/gtest.h"
#include "tokenaudit/pooling.hpp"

namespace tokenaudit {
namespace {

const std::vector<std::string> kWords = {"Minnesota", "Timberwolves", "(", "MIN", ")"};

// "Minnesota Timberwolves (MIN)" as the model tokenizes it.
SubwordProbs minnesota_subwords() {
  SubwordProbs sub;
  sub.spans = {{0, 9}, {10, 16}, {16, 22}, {23, 28}};
  sub.values = ProbMatrix::FromRows({{0.1, 0.7, 0.2},
                                     {0.2, 0.6, 0.2},
                                     {0.4, 0.2, 0.4},
                                     {0.05, 0.15, 0.8}});
  return sub;
}

TEST(Align, MinnesotaTimberwolves) {
  const auto words = detokenize(kWords);
  ASSERT_EQ(words.text, "Minnesota Timberwolves (MIN)");
  const auto sub = minnesota_subwords();
  const Alignment a = align(words.spans, sub.spans, kWords);
  ASSERT_EQ(a.words.size(), 5u);
  EXPECT_EQ(a.words[0], (std::vector<Overlap>{{0, 9}}));
  EXPECT_EQ(a.words[1], (std::vector<Overlap>{{1, 6}, {2, 6}}));
  EXPECT_EQ(a.words[2], (std::vector<Overlap>{{3, 1}}));
  EXPECT_EQ(a.words[3], (std::vector<Overlap>{{3, 3}}));
  EXPECT_EQ(a.words[4], (std::vector<Overlap>{{3, 1}}));
}

TEST(Pool, AveragesSplitWordAndCopiesSharedSubword) {
  const auto words = detokenize(kWords);
  const auto sub = minnesota_subwords();
  const Alignment a = align(words.spans, sub.spans, kWords);
  for (PoolStrategy s : {PoolStrategy::kAverage, PoolStrategy::kWeighted}) {
    const ProbMatrix p = pool(sub, a, s);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(p.at(1, j), (sub.values.at(1, j) + sub.values.at(2, j)) / 2, 1e-15);
      for (std::size_t w = 2; w < 5; ++w) EXPECT_NEAR(p.at(w, j), sub.values.at(3, j), 1e-15);
      EXPECT_NEAR(p.at(0, j), sub.values.at(0, j), 1e-15);
    }
  }
  const ProbMatrix first = pool(sub, a, PoolStrategy::kFirst);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(first.at(1, j), sub.values.at(1, j), 1e-15);
}

TEST(Pool, WeightedUsesOverlapCharacters) {
  SubwordProbs sub;
  sub.spans = {{0, 1}, {1, 4}};
  sub.values = ProbMatrix::FromRows({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<CharSpan> word = {{0, 4}};
  const Alignment a = align(word, sub.spans);
  const ProbMatrix p = pool(sub, a, PoolStrategy::kWeighted);
  EXPECT_NEAR(p.at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(p.at(0, 1), 0.75, 1e-15);
}

TEST(Pool, IdentityAlignmentIsIdentity) {
  std::mt19937_64 rng(9);
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 8, k = 2 + rng() % 5;
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1 + rng() % 5, 'a'));
    const auto spans = detokenize(tokens).spans;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(k);
      double sum = 0;
      for (double& v : row) sum += (v = g(rng));
      for (double v : row) values.push_back(v / sum);
    }
    SubwordProbs sub{spans, ProbMatrix(n, k, values)};
    const Alignment a = align(spans, spans);
    for (PoolStrategy s : {PoolStrategy::kAverage, PoolStrategy::kWeighted, PoolStrategy::kFirst}) {
      const ProbMatrix p = pool(sub, a, s);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(p.at(i, j), sub.values.at(i, j), 1e-15);
      }
    }
  }
}

TEST(Pool, WeightedEqualsAverageForEqualOverlaps) {
  std::mt19937_64 rng(10);
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    // One word cut into `parts` pieces of equal length.
    const std::size_t parts = 1 + rng() % 4, len = 1 + rng() % 4, k = 3;
    const std::vector<CharSpan> word = {{0, parts * len}};
    SubwordProbs sub;
    std::vector<double> values;
    for (std::size_t s = 0; s < parts; ++s) {
      sub.spans.push_back({s * len, (s + 1) * len});
      std::vector<double> row(k);
      double sum = 0;
      for (double& v : row) sum += (v = g(rng));
      for (double v : row) values.push_back(v / sum);
    }
    sub.values = ProbMatrix(parts, k, values);
    const Alignment a = align(word, sub.spans);
    const ProbMatrix avg = pool(sub, a, PoolStrategy::kAverage);
    const ProbMatrix wtd = pool(sub, a, PoolStrategy::kWeighted);
    double sum = 0;
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_NEAR(avg.at(0, j), wtd.at(0, j), 1e-12);
      EXPECT_GE(avg.at(0, j), 0.0);
      sum += avg.at(0, j);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Align, UncoveredWordIsNamed) {
  const std::vector<std::string> names = {"New", "York"};
  const std::vector<CharSpan> words = {{0, 3}, {4, 8}};
  const std::vector<CharSpan> subwords = {{0, 3}};
  try {
    align(words, subwords, names);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("York"), std::string::npos);
  }
}

TEST(Align, WhitespaceBelongsToNoWord) {
  // Subword covering only the gap between two words touches neither.
  const std::vector<CharSpan> words = {{0, 3}, {4, 8}};
  const std::vector<CharSpan> subwords = {{0, 3}, {3, 4}, {4, 8}};
  const Alignment a = align(words, subwords);
  EXPECT_EQ(a.words[0], (std::vector<Overlap>{{0, 3}}));
  EXPECT_EQ(a.words[1], (std::vector<Overlap>{{2, 4}}));
}

TEST(PoolStrategyName, UnknownIsAnError) {
  EXPECT_EQ(parse_pool_strategy("weighted"), PoolStrategy::kWeighted);
  EXPECT_THROW(parse_pool_strategy("max"), ValidationError);
}

}  // namespace
}  // namespace tokenaudit
