#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenaudit/dataset.hpp"

namespace tokenaudit {

enum class TokenMethod { kSelfConfidence, kNormalizedMargin, kConfidenceWeightedEntropy };

inline constexpr TokenMethod kAllTokenMethods[] = {TokenMethod::kSelfConfidence,
                                                   TokenMethod::kNormalizedMargin,
                                                   TokenMethod::kConfidenceWeightedEntropy};

// "self-confidence", "normalized-margin", "cwe".
std::string_view to_string(TokenMethod m);
TokenMethod parse_token_method(std::string_view name);

// Per-token label quality in [0, 1]; higher means the given label is more
// likely correct.
struct TokenQualityVector {
  TokenMethod method = TokenMethod::kSelfConfidence;
  std::vector<double> q;
};

// q_i = p[i, l_i].
TokenQualityVector self_confidence(const ProbMatrix& p, std::span<const ClassId> labels);

// raw_i = p[i, l_i] - max_{j != l_i} p[i, j], stored as (raw_i + 1) / 2.
// Throws ValidationError for a single-class matrix.
TokenQualityVector normalized_margin(const ProbMatrix& p, std::span<const ClassId> labels);

// q_i = clamp(p[i, l_i] / H(p_i), 0, 1) with H the entropy normalized by
// log K. Zero-entropy rows score 1 when one-hot at the given label, else 0.
TokenQualityVector confidence_weighted_entropy(const ProbMatrix& p,
                                               std::span<const ClassId> labels);

TokenQualityVector token_quality(TokenMethod method, const ProbMatrix& p,
                                 std::span<const ClassId> labels);

// Per-class confidence thresholds: the mean predicted probability of class j
// over tokens labelled j. Classes without tokens are unusable.
struct ClassThresholds {
  std::vector<double> t;
  std::vector<std::size_t> support;

  bool usable(ClassId j) const { return support[j] > 0; }
};

// One pass over all tokens of the dataset. Order-independent.
ClassThresholds class_thresholds(std::span<const ProbMatrix> probs,
                                 std::span<const std::vector<ClassId>> labels);
ClassThresholds class_thresholds(const Dataset& ds);

// b_i = 1 iff the most probable class among those clearing their threshold
// exists and differs from the given label. Ties go to the lowest class index.
std::vector<int> flag_tokens(const ProbMatrix& p, std::span<const ClassId> labels,
                             const ClassThresholds& t);

}  // namespace tokenaudit
