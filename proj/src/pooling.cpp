#include "tokenaudit/pooling.hpp"

#include <algorithm>

namespace tokenaudit {

PoolStrategy parse_pool_strategy(std::string_view name) {
  if (name == "average") return PoolStrategy::kAverage;
  if (name == "weighted") return PoolStrategy::kWeighted;
  if (name == "first") return PoolStrategy::kFirst;
  throw ValidationError("unknown pooling strategy '" + std::string(name) +
                        "' (expected average, weighted or first)");
}

std::string_view to_string(PoolStrategy s) {
  switch (s) {
    case PoolStrategy::kAverage: return "average";
    case PoolStrategy::kWeighted: return "weighted";
    case PoolStrategy::kFirst: return "first";
  }
  return "average";
}

Alignment align(std::span<const CharSpan> word_spans, std::span<const CharSpan> subword_spans,
                std::span<const std::string> word_names) {
  Alignment out;
  out.words.resize(word_spans.size());
  // Subwords are sorted, so the first candidate for word i never precedes the
  // first candidate for word i-1.
  std::size_t start = 0;
  for (std::size_t w = 0; w < word_spans.size(); ++w) {
    const CharSpan word = word_spans[w];
    while (start < subword_spans.size() && subword_spans[start].end <= word.begin) ++start;
    for (std::size_t s = start; s < subword_spans.size() && subword_spans[s].begin < word.end;
         ++s) {
      const std::size_t lo = std::max(word.begin, subword_spans[s].begin);
      const std::size_t hi = std::min(word.end, subword_spans[s].end);
      if (hi > lo) out.words[w].push_back({s, hi - lo});
    }
    if (out.words[w].empty()) {
      std::string name = w < word_names.size() ? "'" + word_names[w] + "'"
                                                : "#" + std::to_string(w);
      throw AlignmentError("word " + name + " at [" + std::to_string(word.begin) + ", " +
                           std::to_string(word.end) + ") overlaps no subword");
    }
  }
  return out;
}

ProbMatrix pool(const SubwordProbs& sub, const Alignment& alignment, PoolStrategy strategy) {
  const std::size_t k = sub.values.cols();
  std::vector<double> values(alignment.words.size() * k, 0.0);
  for (std::size_t w = 0; w < alignment.words.size(); ++w) {
    const auto& overlaps = alignment.words[w];
    if (overlaps.empty()) throw AlignmentError("word #" + std::to_string(w) + " has no subwords");
    std::span<double> out(values.data() + w * k, k);
    auto accumulate = [&](std::size_t subword, double weight) {
      if (subword >= sub.values.rows()) {
        throw AlignmentError("alignment refers to subword " + std::to_string(subword) +
                             " beyond " + std::to_string(sub.values.rows()) + " rows");
      }
      const auto row = sub.values.row(subword);
      for (std::size_t j = 0; j < k; ++j) out[j] += weight * row[j];
    };
    switch (strategy) {
      case PoolStrategy::kAverage:
        for (const auto& o : overlaps) accumulate(o.subword, 1.0);
        break;
      case PoolStrategy::kWeighted:
        for (const auto& o : overlaps) accumulate(o.subword, static_cast<double>(o.chars));
        break;
      case PoolStrategy::kFirst: {
        auto first = std::min_element(
            overlaps.begin(), overlaps.end(),
            [](const Overlap& a, const Overlap& b) { return a.subword < b.subword; });
        accumulate(first->subword, 1.0);
        break;
      }
    }
    double sum = 0.0;
    for (double v : out) sum += v;
    for (double& v : out) v /= sum;
  }
  return ProbMatrix(alignment.words.size(), k, std::move(values));
}

void attach_pooled_probs(Dataset& ds, const std::map<SentenceId, SubwordProbs>& subwords,
                         PoolStrategy strategy) {
  std::vector<ProbMatrix> probs;
  probs.reserve(ds.sentences.size());
  for (const auto& s : ds.sentences) {
    auto it = subwords.find(s.id);
    if (it == subwords.end()) {
      throw AlignmentError("no subword probabilities for sentence " + std::to_string(s.id));
    }
    if (it->second.values.cols() != ds.label_space.size()) {
      throw ValidationError("sentence " + std::to_string(s.id) + ": subword probabilities have " +
                            std::to_string(it->second.values.cols()) + " classes, expected " +
                            std::to_string(ds.label_space.size()));
    }
    try {
      const Alignment a = align(s.char_spans, it->second.spans, s.tokens);
      probs.push_back(pool(it->second, a, strategy));
    } catch (const AlignmentError& e) {
      throw AlignmentError("sentence " + std::to_string(s.id) + ": " + e.what());
    }
  }
  ds.probs = std::move(probs);
}

}  // namespace tokenaudit
