#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenaudit/errors.hpp"

namespace tokenaudit {

using ClassId = std::size_t;
using SentenceId = std::int64_t;

// Half-open interval of Unicode scalar positions in the detokenized text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

// Ordered set of class names. Names of the form "B-X" / "I-X" carry an IOB2
// prefix over entity type X; every other name is its own entity type.
class LabelSpace {
 public:
  LabelSpace() = default;

  // Throws ValidationError on duplicate names or when "O" is missing.
  static LabelSpace FromNames(std::vector<std::string> names);

  // The nine CoNLL-2003 IOB2 classes in the column order used by common
  // BERT NER checkpoints.
  static LabelSpace ConllUnmerged();

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(ClassId id) const { return names_.at(id); }
  std::optional<ClassId> find(std::string_view name) const;
  ClassId other_class() const { return other_class_; }

  // 'B', 'I' or '\0' for unprefixed classes.
  char prefix(ClassId id) const { return prefixes_.at(id); }
  const std::string& entity_type(ClassId id) const { return types_.at(id); }
  bool has_prefixes() const;

  // Space with prefixes stripped, types ordered by first appearance.
  // `mapping` receives, for each class of this space, its merged index.
  LabelSpace merged(std::vector<ClassId>* mapping = nullptr) const;

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<char> prefixes_;
  std::vector<std::string> types_;
  ClassId other_class_ = 0;
};

// Row-major n x K matrix of predicted class probabilities for one sentence.
class ProbMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  ProbMatrix() = default;
  // Validates shape, finiteness, non-negativity and row sums.
  ProbMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static ProbMatrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const ProbMatrix&, const ProbMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct TokenizedSentence {
  SentenceId id = 0;
  std::vector<std::string> tokens;
  std::vector<CharSpan> char_spans;
  std::vector<ClassId> given_labels;
  std::optional<std::vector<ClassId>> true_labels;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TokenizedSentence&, const TokenizedSentence&) = default;
};

// A labelled evaluation split. `probs` is either empty (probabilities not yet
// attached) or holds one matrix per sentence, aligned by position.
struct Dataset {
  LabelSpace label_space;
  std::vector<TokenizedSentence> sentences;
  std::vector<ProbMatrix> probs;

  bool has_probs() const { return !probs.empty() || sentences.empty(); }
  bool has_truth() const;
  // Checks every type invariant; throws ValidationError naming the sentence.
  void validate() const;
};

void validate_sentence(const TokenizedSentence& s, const LabelSpace& space);

// Detokenized sentence text with the code point span of every token.
struct Detokenized {
  std::string text;
  std::vector<CharSpan> spans;
};

// Joins tokens with single spaces, except no space before closing punctuation
// tokens (, . ; : ! ? ) ’ ”) and none after opening ones (( ‘ “).
Detokenized detokenize(std::span<const std::string> tokens);

// Reads CoNLL column text. Sentence ids are assigned 0, 1, ... in file order.
// "-DOCSTART-" lines are skipped; extra columns are discarded.
std::vector<TokenizedSentence> parse_conll(std::istream& in, const LabelSpace& space);
std::vector<TokenizedSentence> parse_conll(std::string_view text, const LabelSpace& space);

// Two-column "token label" output, blank line between sentences.
void write_conll(std::ostream& out, std::span<const TokenizedSentence> sentences,
                 const LabelSpace& space);

// Copies the labels of `truth` into `sentences[i].true_labels`. Both lists
// must hold the same sentences with identical tokens.
void attach_truth(std::vector<TokenizedSentence>& sentences,
                  const std::vector<TokenizedSentence>& truth);

// Cleanup applied before probabilities are computed: drops sentences of at
// most one character or containing '#', rewrites all-caps words
// ("JAPAN" -> "Japan") and recomputes char_spans. Idempotent.
std::vector<TokenizedSentence> preprocess(std::vector<TokenizedSentence> sentences);

// Rewrites a token with at least two ASCII letters, all uppercase, to keep
// only its first character uppercase. Other tokens are returned unchanged.
std::string normalize_all_caps(std::string_view token);

// Collapses B-X / I-X into X. Probability columns of merged classes are
// summed. Throws ValidationError when the space carries no prefixes.
Dataset merge_prefixes(const Dataset& ds);

struct ErrorMarks {
  std::vector<bool> sentences;
  std::vector<std::vector<bool>> tokens;

  std::size_t sentence_count() const;
  std::size_t token_count() const;
};

// A token is mislabeled iff given != true; a sentence iff any of its tokens
// is. Throws ValidationError when a sentence has no true labels.
ErrorMarks mark_errors(const Dataset& ds);

}  // namespace tokenaudit
