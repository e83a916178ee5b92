#include <cmath>
#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tokenaudit/sentence_scoring.hpp"

namespace tokenaudit {
namespace {

using V = std::vector<double>;
using B = std::vector<int>;

TEST(PredictedDifference, Examples) {
  const std::vector<ClassId> l1 = {0, 1};
  EXPECT_EQ(score_predicted_difference(ProbMatrix::FromRows({{0.9, 0.1}, {0.3, 0.7}}), l1), 0.0);
  const std::vector<ClassId> l2 = {0};
  EXPECT_NEAR(score_predicted_difference(ProbMatrix::FromRows({{0.2, 0.8}}), l2), -1 - 0.8, 1e-12);
  const std::vector<ClassId> l3 = {0, 0, 1};
  EXPECT_NEAR(score_predicted_difference(
                  ProbMatrix::FromRows({{0.4, 0.6}, {0.1, 0.9}, {0.2, 0.8}}), l3),
              -2 - 0.9, 1e-12);
}

TEST(BadTokenCounts, Examples) {
  const ScoreConfig cfg;
  EXPECT_EQ(score_bad_token_counts(V{0.5, 0.5, 0.5}, B{0, 1, 1}, BadTokenVariant::kPlain, cfg), -2);
  const V q = {0.1, 0.8, 0.6};
  const B b = {1, 0, 0};
  EXPECT_NEAR(score_bad_token_counts(q, b, BadTokenVariant::kAvg, cfg), -1 + 0.1 + 1e-4 * 0.7,
              1e-12);
  EXPECT_NEAR(score_bad_token_counts(q, b, BadTokenVariant::kAvg, cfg), -0.89993, 1e-12);
  EXPECT_NEAR(score_bad_token_counts(q, b, BadTokenVariant::kMin, cfg), -0.89994, 1e-12);
}

TEST(BadTokenCounts, EmptySetsContributeOne) {
  const ScoreConfig cfg;
  // Nothing flagged: the flagged-token term is 1.
  EXPECT_NEAR(score_bad_token_counts(V{0.4, 0.6}, B{0, 0}, BadTokenVariant::kAvg, cfg),
              1 + 1e-4 * 0.5, 1e-12);
  // Everything flagged: the unflagged term is 1.
  EXPECT_NEAR(score_bad_token_counts(V{0.4, 0.6}, B{1, 1}, BadTokenVariant::kMin, cfg),
              -2 + 0.4 + 1e-4, 1e-12);
}

TEST(GoodFraction, Examples) {
  EXPECT_NEAR(score_good_fraction(B{0, 1, 1}), -2.0 / 3, 1e-15);
  EXPECT_EQ(score_good_fraction(B{0, 0}), 0.0);
  EXPECT_EQ(score_good_fraction(B{1, 1, 1}), -1.0);
}

TEST(PenalizeBadTokens, Examples) {
  EXPECT_NEAR(score_penalize_bad_tokens(V{0.2, 0.9}, B{1, 0}), 0.6, 1e-12);
  EXPECT_EQ(score_penalize_bad_tokens(V{0.2, 0.9}, B{0, 0}), 1.0);
  EXPECT_EQ(score_penalize_bad_tokens(V{0.0}, B{1}), 0.0);
}

TEST(AverageQuality, Examples) {
  EXPECT_NEAR(score_average_quality(V{0.2, 0.9, 0.4}), 0.5, 1e-15);
  EXPECT_NEAR(score_average_quality(V{0.7, 0.7, 0.7}), 0.7, 1e-15);
  EXPECT_EQ(score_average_quality(V{0.31}), 0.31);
}

TEST(Product, Examples) {
  const ScoreConfig cfg;
  EXPECT_NEAR(score_product(V{0.5, 0.5}, cfg), 2 * std::log(0.501), 1e-12);
  EXPECT_NEAR(score_product(V{0.5, 0.5}, cfg), -1.3822983557945445, 1e-12);
  EXPECT_NEAR(score_product(V{1.0}, cfg), 0.0009995003330834232, 1e-15);
  EXPECT_NEAR(score_product(V{0.0}, cfg), -6.907755278982137, 1e-12);
}

TEST(Expected, Examples) {
  const ScoreConfig cfg;
  EXPECT_NEAR(score_expected(V{0.9, 0.2, 0.5}, ExpectedVariant::kBad, cfg), 1.2, 1e-12);
  EXPECT_NEAR(score_expected(V{0.9, 0.2, 0.5}, ExpectedVariant::kAlt, cfg), 0.7, 1e-12);
  // Fewer tokens than J.
  EXPECT_NEAR(score_expected(V{0.3}, ExpectedVariant::kBad, cfg), 0.3, 1e-15);
}

TEST(WorstToken, Examples) {
  const ScoreConfig cfg;
  const auto plain = score_worst_token(V{0.2, 0.9, 0.5}, {}, WorstTokenVariant::kPlain, cfg);
  EXPECT_EQ(plain.score, 0.2);
  EXPECT_EQ(plain.index, 0u);
  EXPECT_NEAR(score_worst_token(V{0.2, 0.5}, B{1, 0}, WorstTokenVariant::kMinAlt, cfg).score, 0.3,
              1e-15);
  EXPECT_NEAR(score_worst_token(V{0.5, 0.5}, {}, WorstTokenVariant::kSoftmin, cfg).score, 0.5,
              1e-15);
  // First minimum wins ties.
  EXPECT_EQ(score_worst_token(V{0.4, 0.1, 0.1}, {}, WorstTokenVariant::kPlain, cfg).index, 1u);
}

TEST(WorstToken, SoftminIsStableForTinyTemperature) {
  ScoreConfig cfg;
  cfg.temperature = 1e-9;
  const auto s = score_worst_token(V{0.2, 0.9, 0.5}, {}, WorstTokenVariant::kSoftmin, cfg);
  EXPECT_TRUE(std::isfinite(s.score));
  EXPECT_NEAR(s.score, 0.2, 1e-12);
}

TEST(ScoreConfig, Validation) {
  ScoreConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.J = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.temperature = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.d = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.c = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.epsilon = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(SentenceMethodName, ParseListsValidNames) {
  for (SentenceMethod m : kAllSentenceMethods) EXPECT_EQ(parse_sentence_method(to_string(m)), m);
  try {
    parse_sentence_method("best-token");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("worst-token-softmin"), std::string::npos);
  }
}

TEST(AllSelections, SkipsTokenMethodForTokenFreeMethods) {
  const auto all = all_selections(kAllTokenMethods);
  EXPECT_EQ(all.size(), 3u + 10u * 3u);
  for (const auto& s : all) EXPECT_EQ(s.token_method.has_value(), uses_token_score(s.method));
}

struct RandomSentence {
  V q;
  B b;
};

RandomSentence random_sentence(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  RandomSentence s;
  const std::size_t n = 1 + rng() % 25;
  for (std::size_t i = 0; i < n; ++i) {
    s.q.push_back(u(rng));
    s.b.push_back(u(rng) < 0.2 ? 1 : 0);
  }
  return s;
}

TEST(SentenceProperties, MethodIdentities) {
  std::mt19937_64 rng(21);
  ScoreConfig j1;
  j1.J = 1;
  ScoreConfig d0;
  d0.d = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_sentence(rng);
    const double worst = score_worst_token(s.q, {}, WorstTokenVariant::kPlain).score;
    EXPECT_LE(worst, score_average_quality(s.q));
    EXPECT_EQ(score_expected(s.q, ExpectedVariant::kBad, j1), worst);
    EXPECT_EQ(score_expected(s.q, ExpectedVariant::kAlt, j1), worst);
    EXPECT_EQ(score_worst_token(s.q, s.b, WorstTokenVariant::kMinAlt, d0).score, worst);
  }
}

TEST(SentenceProperties, SoftminLimits) {
  std::mt19937_64 rng(22);
  ScoreConfig cold, hot;
  cold.temperature = 1e-6;
  hot.temperature = 1e6;
  std::vector<double> worst, softmin_cold, average, softmin_hot;
  for (int i = 0; i < 100; ++i) {
    const auto s = random_sentence(rng);
    worst.push_back(score_worst_token(s.q, {}, WorstTokenVariant::kPlain).score);
    softmin_cold.push_back(score_worst_token(s.q, {}, WorstTokenVariant::kSoftmin, cold).score);
    average.push_back(score_average_quality(s.q));
    softmin_hot.push_back(score_worst_token(s.q, {}, WorstTokenVariant::kSoftmin, hot).score);
  }
  EXPECT_EQ(oracle::ranking(softmin_cold), oracle::ranking(worst));
  EXPECT_EQ(oracle::ranking(softmin_hot), oracle::ranking(average));
}

TEST(SentenceProperties, PermutationInvariance) {
  std::mt19937_64 rng(23);
  const ScoreConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_sentence(rng);
    std::vector<std::size_t> perm(s.q.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    RandomSentence t;
    for (auto i : perm) {
      t.q.push_back(s.q[i]);
      t.b.push_back(s.b[i]);
    }
    EXPECT_EQ(score_worst_token(s.q, s.b, WorstTokenVariant::kMinAlt, cfg).score,
              score_worst_token(t.q, t.b, WorstTokenVariant::kMinAlt, cfg).score);
    EXPECT_EQ(score_expected(s.q, ExpectedVariant::kBad, cfg),
              score_expected(t.q, ExpectedVariant::kBad, cfg));
    EXPECT_NEAR(score_worst_token(s.q, s.b, WorstTokenVariant::kSoftmin, cfg).score,
                score_worst_token(t.q, t.b, WorstTokenVariant::kSoftmin, cfg).score, 1e-12);
    EXPECT_NEAR(score_product(s.q, cfg), score_product(t.q, cfg), 1e-12);
    EXPECT_EQ(score_bad_token_counts(s.q, s.b, BadTokenVariant::kMin, cfg),
              score_bad_token_counts(t.q, t.b, BadTokenVariant::kMin, cfg));
  }
}

TEST(ScoreDataset, EmptyDatasetGivesNoRecords) {
  Dataset ds;
  ds.label_space = testing::synthetic_space();
  EXPECT_TRUE(score_all(ds, kAllTokenMethods, {}).empty());
}

TEST(ScoreDataset, SingleTokenSentenceIsFinite) {
  Dataset ds;
  ds.label_space = LabelSpace::FromNames({"O", "PER"});
  TokenizedSentence s;
  s.id = 4;
  s.tokens = {"Peter"};
  s.char_spans = detokenize(s.tokens).spans;
  s.given_labels = {1};
  ds.sentences.push_back(s);
  ds.probs.push_back(ProbMatrix::FromRows({{0.3, 0.7}}));
  const auto records = score_all(ds, kAllTokenMethods, {});
  ASSERT_EQ(records.size(), 33u);
  for (const auto& r : records) {
    EXPECT_TRUE(std::isfinite(r.score)) << to_string(r.method);
    EXPECT_EQ(r.sentence_id, 4);
    EXPECT_EQ(r.worst_token_index.has_value(), is_worst_token_family(r.method));
  }
}

TEST(ScoreDataset, OrderedBySelectionThenId) {
  testing::SyntheticOptions opt;
  opt.sentences = 40;
  Dataset ds = testing::make_synthetic(5, opt);
  std::reverse(ds.sentences.begin(), ds.sentences.end());
  std::reverse(ds.probs.begin(), ds.probs.end());
  const std::vector<MethodSelection> sel = {
      {SentenceMethod::kWorstToken, TokenMethod::kSelfConfidence},
      {SentenceMethod::kGoodFraction, std::nullopt}};
  const auto records = score_dataset(ds, sel, {});
  ASSERT_EQ(records.size(), 80u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(records[i].sentence_id, static_cast<SentenceId>(i));
    EXPECT_EQ(records[i].method, SentenceMethod::kWorstToken);
    EXPECT_EQ(records[40 + i].method, SentenceMethod::kGoodFraction);
    EXPECT_FALSE(records[40 + i].token_method.has_value());
  }
}

TEST(ScoreDataset, WorstTokenMatchesDirectComputation) {
  testing::SyntheticOptions opt;
  opt.sentences = 30;
  const Dataset ds = testing::make_synthetic(6, opt);
  const std::vector<MethodSelection> sel = {
      {SentenceMethod::kWorstToken, TokenMethod::kConfidenceWeightedEntropy}};
  const auto records = score_dataset(ds, sel, {});
  ASSERT_EQ(records.size(), ds.sentences.size());
  for (std::size_t s = 0; s < ds.sentences.size(); ++s) {
    const auto q = confidence_weighted_entropy(ds.probs[s], ds.sentences[s].given_labels).q;
    const auto it = std::min_element(q.begin(), q.end());
    EXPECT_EQ(records[s].score, *it);
    EXPECT_EQ(*records[s].worst_token_index, static_cast<std::size_t>(it - q.begin()));
  }
}

}  // namespace
}  // namespace tokenaudit
