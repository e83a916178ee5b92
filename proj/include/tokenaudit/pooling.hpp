#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenaudit/dataset.hpp"

namespace tokenaudit {

// Model outputs at subword granularity for one sentence.
struct SubwordProbs {
  std::vector<CharSpan> spans;
  ProbMatrix values;  // one row per span
};

struct Overlap {
  std::size_t subword = 0;
  std::size_t chars = 0;  // shared code points
  friend bool operator==(const Overlap&, const Overlap&) = default;
};

// words[i] lists the subwords overlapping word i, in increasing index order.
struct Alignment {
  std::vector<std::vector<Overlap>> words;
};

enum class PoolStrategy { kAverage, kWeighted, kFirst };

PoolStrategy parse_pool_strategy(std::string_view name);
std::string_view to_string(PoolStrategy s);

// Maps each word to the subwords whose half-open spans intersect it. Both
// lists must be sorted. `word_names`, when given, is used in error messages.
// Throws AlignmentError for a word no subword touches.
Alignment align(std::span<const CharSpan> word_spans, std::span<const CharSpan> subword_spans,
                std::span<const std::string> word_names = {});

// Word-level probabilities: mean, overlap-weighted mean, or the first mapped
// subword. Rows are renormalized to sum to one.
ProbMatrix pool(const SubwordProbs& sub, const Alignment& alignment, PoolStrategy strategy);

// Aligns and pools every sentence of `ds` in place. Missing ids are an error.
void attach_pooled_probs(Dataset& ds, const std::map<SentenceId, SubwordProbs>& subwords,
                         PoolStrategy strategy);

}  // namespace tokenaudit
