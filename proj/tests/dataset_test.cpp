#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "tokenaudit/dataset.hpp"
#include "tokenaudit/io.hpp"

namespace tokenaudit {
namespace {

const LabelSpace kConll = LabelSpace::ConllUnmerged();

ClassId id_of(const LabelSpace& space, const char* name) { return *space.find(name); }

TEST(LabelSpace, RejectsDuplicatesAndMissingOther) {
  EXPECT_THROW(LabelSpace::FromNames({"O", "PER", "PER"}), ValidationError);
  EXPECT_THROW(LabelSpace::FromNames({"PER", "LOC"}), ValidationError);
}

TEST(LabelSpace, PrefixStructure) {
  EXPECT_TRUE(kConll.has_prefixes());
  const ClassId b_loc = id_of(kConll, "B-LOC");
  EXPECT_EQ(kConll.prefix(b_loc), 'B');
  EXPECT_EQ(kConll.entity_type(b_loc), "LOC");
  EXPECT_EQ(kConll.prefix(kConll.other_class()), '\0');

  std::vector<ClassId> map;
  const LabelSpace merged = kConll.merged(&map);
  EXPECT_EQ(merged.names(), (std::vector<std::string>{"O", "MISC", "PER", "ORG", "LOC"}));
  EXPECT_FALSE(merged.has_prefixes());
  EXPECT_EQ(map[id_of(kConll, "I-LOC")], id_of(merged, "LOC"));
}

TEST(ParseConll, ReadsFourColumnFormat) {
  const auto sentences = parse_conll(
      "-DOCSTART- -X- -X- O\n\n"
      "EU NNP B-NP B-ORG\nrejects VBZ B-VP O\nGerman JJ B-NP B-MISC\n\n"
      "Peter NNP B-NP B-PER\nBlackburn NNP I-NP I-PER\n",
      kConll);
  ASSERT_EQ(sentences.size(), 2u);
  EXPECT_EQ(sentences[0].id, 0);
  EXPECT_EQ(sentences[0].tokens, (std::vector<std::string>{"EU", "rejects", "German"}));
  EXPECT_EQ(sentences[0].given_labels,
            (std::vector<ClassId>{id_of(kConll, "B-ORG"), kConll.other_class(),
                                  id_of(kConll, "B-MISC")}));
  EXPECT_EQ(sentences[1].id, 1);
  EXPECT_EQ(sentences[0].char_spans, (std::vector<CharSpan>{{0, 2}, {3, 10}, {11, 17}}));
}

TEST(ParseConll, EmptyInputGivesNoSentences) {
  EXPECT_TRUE(parse_conll("", kConll).empty());
  EXPECT_TRUE(parse_conll("\n\n-DOCSTART- O\n\n", kConll).empty());
}

TEST(ParseConll, MissingLabelColumnReportsLine) {
  try {
    parse_conll("foo\n", kConll);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseConll, UnknownLabelIsNamed) {
  try {
    parse_conll("EU B-ORG\nx B-FOO\n", kConll);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("B-FOO"), std::string::npos);
  }
}

TEST(ParseConll, RoundTripsTokensAndLabels) {
  std::mt19937 rng(7);
  const std::vector<std::string> vocab = {"EU", "rejects", ",", "(", "Japan", "MIN", ")", "win"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenizedSentence> sentences;
    const int count = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < count; ++s) {
      TokenizedSentence t;
      t.id = s;
      const int n = 1 + static_cast<int>(rng() % 8);
      for (int i = 0; i < n; ++i) {
        t.tokens.push_back(vocab[rng() % vocab.size()]);
        t.given_labels.push_back(rng() % kConll.size());
      }
      t.char_spans = detokenize(t.tokens).spans;
      sentences.push_back(std::move(t));
    }
    std::ostringstream out;
    write_conll(out, sentences, kConll);
    EXPECT_EQ(parse_conll(out.str(), kConll), sentences);
  }
}

TEST(Detokenize, PunctuationSpacing) {
  const std::vector<std::string> tokens = {"win", ",", "China"};
  const auto d = detokenize(tokens);
  EXPECT_EQ(d.text, "win, China");
  EXPECT_EQ(d.spans, (std::vector<CharSpan>{{0, 3}, {3, 4}, {5, 10}}));

  const std::vector<std::string> paren = {"Minnesota", "Timberwolves", "(", "MIN", ")"};
  EXPECT_EQ(detokenize(paren).text, "Minnesota Timberwolves (MIN)");

  const std::vector<std::string> quotes = {"“", "Yes", "”", "he", "said", "..."};
  const auto q = detokenize(quotes);
  EXPECT_EQ(q.text, "“Yes” he said...");
  // Spans count code points, not bytes.
  EXPECT_EQ(q.spans[1], (CharSpan{1, 4}));
  EXPECT_EQ(q.spans[2], (CharSpan{4, 5}));
}

TEST(Preprocess, AllCapsRewrite) {
  EXPECT_EQ(normalize_all_caps("JAPAN"), "Japan");
  EXPECT_EQ(normalize_all_caps("A"), "A");
  EXPECT_EQ(normalize_all_caps("Japan"), "Japan");
  EXPECT_EQ(normalize_all_caps("U.S."), "U.s.");
  EXPECT_EQ(normalize_all_caps("1990"), "1990");
}

TEST(Preprocess, DropsShortAndHashSentences) {
  auto sentences = parse_conll(
      ". O\n\n"
      "SOCCER O\n- O\nJAPAN B-LOC\nGET O\nLUCKY O\nWIN O\n, O\nCHINA B-PER\n\n"
      "# O\nfoo O\n\n"
      "a#b O\n",
      kConll);
  ASSERT_EQ(sentences.size(), 4u);
  const auto kept = preprocess(sentences);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, 1);
  EXPECT_EQ(detokenize(kept[0].tokens).text, "Soccer - Japan Get Lucky Win, China");
  EXPECT_EQ(kept[0].char_spans, detokenize(kept[0].tokens).spans);
}

TEST(Preprocess, IsIdempotent) {
  std::mt19937 rng(11);
  const std::vector<std::string> vocab = {"JAPAN", "win", ",", "(", "MIN", ")", ".", "A",
                                          "U.S.",  "#",   "“", "”", "NBA", "x"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenizedSentence> sentences;
    for (int s = 0; s < 4; ++s) {
      TokenizedSentence t;
      t.id = s;
      const int n = 1 + static_cast<int>(rng() % 5);
      for (int i = 0; i < n; ++i) {
        t.tokens.push_back(vocab[rng() % vocab.size()]);
        t.given_labels.push_back(0);
      }
      t.char_spans = detokenize(t.tokens).spans;
      sentences.push_back(std::move(t));
    }
    const auto once = preprocess(sentences);
    EXPECT_EQ(preprocess(once), once);
  }
}

Dataset tiny_prefixed() {
  Dataset ds;
  ds.label_space = LabelSpace::FromNames({"O", "B-LOC", "I-LOC"});
  TokenizedSentence s;
  s.id = 0;
  s.tokens = {"New", "York", "is"};
  s.char_spans = detokenize(s.tokens).spans;
  s.given_labels = {1, 2, 0};
  s.true_labels = std::vector<ClassId>{1, 2, 0};
  ds.sentences.push_back(s);
  ds.probs.push_back(ProbMatrix::FromRows({{0.2, 0.3, 0.5}, {0.1, 0.1, 0.8}, {0.9, 0.05, 0.05}}));
  return ds;
}

TEST(MergePrefixes, MapsLabelsAndSumsColumns) {
  const Dataset merged = merge_prefixes(tiny_prefixed());
  EXPECT_EQ(merged.label_space.names(), (std::vector<std::string>{"O", "LOC"}));
  EXPECT_EQ(merged.sentences[0].given_labels, (std::vector<ClassId>{1, 1, 0}));
  EXPECT_EQ(*merged.sentences[0].true_labels, (std::vector<ClassId>{1, 1, 0}));
  // Column-sum oracle: O stays 0.2, LOC = 0.3 + 0.5.
  EXPECT_DOUBLE_EQ(merged.probs[0].at(0, 0), 0.2);
  EXPECT_DOUBLE_EQ(merged.probs[0].at(0, 1), 0.3 + 0.5);
  EXPECT_EQ(merged.probs[0].rows(), 3u);
}

TEST(MergePrefixes, AlreadyMergedIsAnError) {
  const Dataset merged = merge_prefixes(tiny_prefixed());
  EXPECT_THROW(merge_prefixes(merged), ValidationError);
}

TEST(MergePrefixes, OnlyOtherLabels) {
  Dataset ds = tiny_prefixed();
  ds.sentences[0].given_labels = {0, 0, 0};
  const Dataset merged = merge_prefixes(ds);
  EXPECT_EQ(merged.sentences[0].given_labels, (std::vector<ClassId>{0, 0, 0}));
  EXPECT_EQ(merged.probs[0].cols(), 2u);
}

TEST(MergePrefixes, PreservesRowSums) {
  std::mt19937_64 rng(3);
  std::gamma_distribution<double> g(0.5, 1.0);
  Dataset ds;
  ds.label_space = kConll;
  for (int s = 0; s < 100; ++s) {
    TokenizedSentence t;
    t.id = s;
    const std::size_t n = 1 + rng() % 10;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      t.tokens.push_back("t");
      t.given_labels.push_back(rng() % kConll.size());
      std::vector<double> row(kConll.size());
      double sum = 0;
      for (double& v : row) sum += (v = g(rng) + 1e-12);
      for (double& v : row) values.push_back(v / sum);
    }
    t.char_spans = detokenize(t.tokens).spans;
    ds.sentences.push_back(t);
    ds.probs.emplace_back(n, kConll.size(), values);
  }
  const Dataset merged = merge_prefixes(ds);
  for (std::size_t s = 0; s < ds.probs.size(); ++s) {
    ASSERT_EQ(merged.probs[s].rows(), ds.probs[s].rows());
    for (std::size_t i = 0; i < ds.probs[s].rows(); ++i) {
      double before = 0, after = 0;
      for (double v : ds.probs[s].row(i)) before += v;
      for (double v : merged.probs[s].row(i)) after += v;
      EXPECT_NEAR(before, after, 1e-12);
    }
  }
}

TEST(MarkErrors, ElementwiseComparison) {
  Dataset ds;
  ds.label_space = LabelSpace::FromNames({"O", "LOC", "PER"});
  TokenizedSentence s;
  s.id = 0;
  s.tokens = {"Japan", "China"};
  s.char_spans = detokenize(s.tokens).spans;
  s.given_labels = {1, 2};
  s.true_labels = std::vector<ClassId>{1, 1};
  ds.sentences.push_back(s);
  s.id = 1;
  s.given_labels = {1, 1};
  ds.sentences.push_back(s);

  const ErrorMarks marks = mark_errors(ds);
  EXPECT_EQ(marks.tokens[0], (std::vector<bool>{false, true}));
  EXPECT_TRUE(marks.sentences[0]);
  EXPECT_EQ(marks.tokens[1], (std::vector<bool>{false, false}));
  EXPECT_FALSE(marks.sentences[1]);
  EXPECT_EQ(marks.sentence_count(), 1u);
}

TEST(MarkErrors, MissingTruthIsAnError) {
  Dataset ds = tiny_prefixed();
  ds.sentences[0].true_labels.reset();
  EXPECT_THROW(mark_errors(ds), ValidationError);
}

TEST(MarkErrors, SentenceFlagIsOrOfTokenFlags) {
  std::mt19937 rng(5);
  Dataset ds;
  ds.label_space = LabelSpace::FromNames({"O", "A", "B"});
  for (int s = 0; s < 300; ++s) {
    TokenizedSentence t;
    t.id = s;
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<ClassId> truth;
    for (int i = 0; i < n; ++i) {
      t.tokens.push_back("x");
      t.given_labels.push_back(rng() % 3);
      truth.push_back(rng() % 4 == 0 ? rng() % 3 : t.given_labels.back());
    }
    t.true_labels = truth;
    t.char_spans = detokenize(t.tokens).spans;
    ds.sentences.push_back(t);
  }
  const ErrorMarks marks = mark_errors(ds);
  for (std::size_t s = 0; s < ds.sentences.size(); ++s) {
    bool any = false;
    for (std::size_t i = 0; i < ds.sentences[s].size(); ++i) {
      const bool differs = ds.sentences[s].given_labels[i] != (*ds.sentences[s].true_labels)[i];
      EXPECT_EQ(marks.tokens[s][i], differs);
      any = any || differs;
    }
    EXPECT_EQ(marks.sentences[s], any);
  }
}

TEST(ProbMatrix, ValidatesRows) {
  EXPECT_THROW(ProbMatrix::FromRows({{0.5, 0.4}}), ValidationError);
  EXPECT_THROW(ProbMatrix::FromRows({{1.5, -0.5}}), ValidationError);
  EXPECT_THROW(ProbMatrix(1, 2, {1.0}), ValidationError);
  EXPECT_NO_THROW(ProbMatrix::FromRows({{0.5, 0.5 + 5e-7}}));
}

TEST(CanonicalFile, RoundTripIsByteStable) {
  Dataset ds = tiny_prefixed();
  std::ostringstream first;
  write_dataset(first, ds);
  std::istringstream in(first.str());
  const Dataset back = read_dataset(in);
  EXPECT_EQ(back.sentences, ds.sentences);
  EXPECT_EQ(back.probs, ds.probs);
  EXPECT_EQ(back.label_space, ds.label_space);
  std::ostringstream second;
  write_dataset(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(CanonicalFile, RejectsMissingHeaderAndPartialProbs) {
  std::istringstream no_header(R"({"id":0,"tokens":["a"],"given_labels":[0]})" "\n");
  EXPECT_THROW(read_dataset(no_header), Error);

  std::istringstream partial(
      R"({"schema":"tokenaudit.dataset/1","classes":["O","X"]})" "\n"
      R"({"id":0,"tokens":["a"],"given_labels":[0],"probs":[1.0,0.0]})" "\n"
      R"({"id":1,"tokens":["b"],"given_labels":[1]})" "\n");
  EXPECT_THROW(read_dataset(partial), ValidationError);
}

}  // namespace
}  // namespace tokenaudit
