#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenaudit/dataset.hpp"
#include "tokenaudit/token_scoring.hpp"

namespace tokenaudit {

// Sentence-level label quality scores. Higher scores mean the sentence's
// labels are more likely all correct; reviewers start from the lowest.
enum class SentenceMethod {
  kPredictedDifference,
  kBadTokenCounts,
  kBadTokenCountsAvg,
  kBadTokenCountsMin,
  kGoodFraction,
  kPenalizeBadTokens,
  kAverageQuality,
  kProduct,
  kExpectedBad,
  kExpectedAlt,
  kWorstToken,
  kWorstTokenMinAlt,
  kWorstTokenSoftmin,
};

inline constexpr SentenceMethod kAllSentenceMethods[] = {
    SentenceMethod::kPredictedDifference, SentenceMethod::kBadTokenCounts,
    SentenceMethod::kBadTokenCountsAvg,   SentenceMethod::kBadTokenCountsMin,
    SentenceMethod::kGoodFraction,        SentenceMethod::kPenalizeBadTokens,
    SentenceMethod::kAverageQuality,      SentenceMethod::kProduct,
    SentenceMethod::kExpectedBad,         SentenceMethod::kExpectedAlt,
    SentenceMethod::kWorstToken,          SentenceMethod::kWorstTokenMinAlt,
    SentenceMethod::kWorstTokenSoftmin,
};

std::string_view to_string(SentenceMethod m);
// Throws ValidationError listing the valid names.
SentenceMethod parse_sentence_method(std::string_view name);
std::string valid_sentence_method_names();

// False for the three methods that ignore token quality scores.
bool uses_token_score(SentenceMethod m);
bool is_worst_token_family(SentenceMethod m);

struct ScoreConfig {
  double epsilon = 1e-4;                        // tie-break weight, bad-token-counts-*
  double c = 1e-3;                              // product offset
  int J = 2;                                    // expected-* truncation
  double d = 0.1;                               // worst-token-min-alt penalty
  double temperature = 0.031622776601683794;    // worst-token-softmin, 10^-1.5

  // Throws ValidationError on out-of-range values.
  void validate() const;
};

enum class BadTokenVariant { kPlain, kAvg, kMin };
enum class ExpectedVariant { kBad, kAlt };
enum class WorstTokenVariant { kPlain, kMinAlt, kSoftmin };

struct WorstTokenScore {
  double score = 0.0;
  std::size_t index = 0;
};

// -|R| - max_{i in R} p[i, argmax_j p_ij] over tokens R whose argmax disagrees
// with the given label; 0 when R is empty.
double score_predicted_difference(const ProbMatrix& p, std::span<const ClassId> labels);

double score_bad_token_counts(std::span<const double> q, std::span<const int> b,
                              BadTokenVariant variant, const ScoreConfig& cfg = {});
double score_good_fraction(std::span<const int> b);
double score_penalize_bad_tokens(std::span<const double> q, std::span<const int> b);
double score_average_quality(std::span<const double> q);
double score_product(std::span<const double> q, const ScoreConfig& cfg = {});
double score_expected(std::span<const double> q, ExpectedVariant variant,
                      const ScoreConfig& cfg = {});
// `b` may be empty unless variant is kMinAlt.
WorstTokenScore score_worst_token(std::span<const double> q, std::span<const int> b,
                                  WorstTokenVariant variant, const ScoreConfig& cfg = {});

// Token-level inputs for one sentence under one token method.
struct SentenceEvidence {
  const ProbMatrix* probs = nullptr;
  std::span<const ClassId> labels;
  std::span<const double> q;
  std::span<const int> b;
};

struct SentenceScore {
  double score = 0.0;
  std::optional<std::size_t> worst_token_index;
};

SentenceScore score_sentence(SentenceMethod method, const SentenceEvidence& e,
                             const ScoreConfig& cfg);

struct SentenceScoreRecord {
  SentenceId sentence_id = 0;
  SentenceMethod method = SentenceMethod::kWorstToken;
  std::optional<TokenMethod> token_method;
  double score = 0.0;
  std::optional<std::size_t> worst_token_index;
};

// One (method, token method) combination; token method is ignored for
// methods that do not use token scores.
struct MethodSelection {
  SentenceMethod method = SentenceMethod::kWorstToken;
  std::optional<TokenMethod> token_method;

  std::string label() const;
  friend bool operator==(const MethodSelection&, const MethodSelection&) = default;
};

// Every combination: token-free methods once, the rest once per token method.
std::vector<MethodSelection> all_selections(std::span<const TokenMethod> token_methods);

// Per-sentence CL flags for a dataset (thresholds computed over all tokens).
std::vector<std::vector<int>> dataset_flags(const Dataset& ds);

// Scores every sentence for each selection. Records are ordered by
// selection, then by ascending sentence id.
std::vector<SentenceScoreRecord> score_dataset(const Dataset& ds,
                                               std::span<const MethodSelection> selections,
                                               const ScoreConfig& cfg);

std::vector<SentenceScoreRecord> score_all(const Dataset& ds,
                                           std::span<const TokenMethod> token_methods,
                                           const ScoreConfig& cfg);

}  // namespace tokenaudit
