#include "tokenaudit/sentence_scoring.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace tokenaudit {

namespace {

struct MethodInfo {
  SentenceMethod method;
  std::string_view name;
  bool token_score;
};

constexpr MethodInfo kMethods[] = {
    {SentenceMethod::kPredictedDifference, "predicted-difference", false},
    {SentenceMethod::kBadTokenCounts, "bad-token-counts", false},
    {SentenceMethod::kBadTokenCountsAvg, "bad-token-counts-avg", true},
    {SentenceMethod::kBadTokenCountsMin, "bad-token-counts-min", true},
    {SentenceMethod::kGoodFraction, "good-fraction", false},
    {SentenceMethod::kPenalizeBadTokens, "penalize-bad-tokens", true},
    {SentenceMethod::kAverageQuality, "average-quality", true},
    {SentenceMethod::kProduct, "product", true},
    {SentenceMethod::kExpectedBad, "expected-bad", true},
    {SentenceMethod::kExpectedAlt, "expected-alt", true},
    {SentenceMethod::kWorstToken, "worst-token", true},
    {SentenceMethod::kWorstTokenMinAlt, "worst-token-min-alt", true},
    {SentenceMethod::kWorstTokenSoftmin, "worst-token-softmin", true},
};

const MethodInfo& info(SentenceMethod m) {
  return kMethods[static_cast<std::size_t>(m)];
}

void check_same_length(std::span<const double> q, std::span<const int> b) {
  if (q.size() != b.size()) throw ValidationError("quality and flag vectors differ in length");
}

void check_nonempty(std::size_t n) {
  if (n == 0) throw ValidationError("sentence has no tokens");
}

double mean_or_one(std::span<const double> q, std::span<const int> b, int want) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (b[i] == want) {
      sum += q[i];
      ++count;
    }
  }
  return count == 0 ? 1.0 : sum / static_cast<double>(count);
}

double min_or_one(std::span<const double> q, std::span<const int> b, int want) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (b[i] == want) m = std::min(m, q[i]);
  }
  return std::isinf(m) ? 1.0 : m;
}

}  // namespace

std::string_view to_string(SentenceMethod m) { return info(m).name; }

bool uses_token_score(SentenceMethod m) { return info(m).token_score; }

bool is_worst_token_family(SentenceMethod m) {
  return m == SentenceMethod::kWorstToken || m == SentenceMethod::kWorstTokenMinAlt ||
         m == SentenceMethod::kWorstTokenSoftmin;
}

std::string valid_sentence_method_names() {
  std::string out;
  for (const auto& m : kMethods) {
    if (!out.empty()) out += ", ";
    out += m.name;
  }
  return out;
}

SentenceMethod parse_sentence_method(std::string_view name) {
  for (const auto& m : kMethods) {
    if (m.name == name) return m.method;
  }
  throw ValidationError("unknown sentence method '" + std::string(name) +
                        "' (valid: " + valid_sentence_method_names() + ")");
}

void ScoreConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(c > 0.0)) throw ValidationError("product offset c must be > 0");
  if (J < 1) throw ValidationError("J must be >= 1");
  if (!(d >= 0.0)) throw ValidationError("min-alt penalty d must be >= 0");
  if (!(temperature > 0.0)) throw ValidationError("softmin temperature must be > 0");
}

double score_predicted_difference(const ProbMatrix& p, std::span<const ClassId> labels) {
  if (p.rows() != labels.size()) throw ValidationError("probability rows and labels differ");
  std::size_t disagreements = 0;
  double max_conf = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = p.row(i);
    const auto argmax = static_cast<ClassId>(std::max_element(row.begin(), row.end()) - row.begin());
    if (argmax != labels[i]) {
      ++disagreements;
      max_conf = std::max(max_conf, row[argmax]);
    }
  }
  return -static_cast<double>(disagreements) - max_conf;
}

double score_bad_token_counts(std::span<const double> q, std::span<const int> b,
                              BadTokenVariant variant, const ScoreConfig& cfg) {
  const double flagged = static_cast<double>(std::count(b.begin(), b.end(), 1));
  if (variant == BadTokenVariant::kPlain) return -flagged;
  check_same_length(q, b);
  if (variant == BadTokenVariant::kAvg) {
    return -flagged + mean_or_one(q, b, 1) + cfg.epsilon * mean_or_one(q, b, 0);
  }
  return -flagged + min_or_one(q, b, 1) + cfg.epsilon * min_or_one(q, b, 0);
}

double score_good_fraction(std::span<const int> b) {
  check_nonempty(b.size());
  const double flagged = static_cast<double>(std::count(b.begin(), b.end(), 1));
  return -flagged / static_cast<double>(b.size());
}

double score_penalize_bad_tokens(std::span<const double> q, std::span<const int> b) {
  check_same_length(q, b);
  check_nonempty(q.size());
  double penalty = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) penalty += b[i] * (1.0 - q[i]);
  return 1.0 - penalty / static_cast<double>(q.size());
}

double score_average_quality(std::span<const double> q) {
  check_nonempty(q.size());
  return std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
}

double score_product(std::span<const double> q, const ScoreConfig& cfg) {
  double s = 0.0;
  for (double v : q) s += std::log(v + cfg.c);
  return s;
}

double score_expected(std::span<const double> q, ExpectedVariant variant, const ScoreConfig& cfg) {
  if (cfg.J < 1) throw ValidationError("J must be >= 1");
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
  const std::size_t terms = std::min(q.size(), static_cast<std::size_t>(cfg.J));
  double s = 0.0;
  for (std::size_t j = 0; j < terms; ++j) {
    const double weight = variant == ExpectedVariant::kBad ? static_cast<double>(j + 1) : 1.0;
    s += weight * q[order[j]];
  }
  return s;
}

WorstTokenScore score_worst_token(std::span<const double> q, std::span<const int> b,
                                  WorstTokenVariant variant, const ScoreConfig& cfg) {
  check_nonempty(q.size());
  const auto argmin = [](std::span<const double> v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  };
  switch (variant) {
    case WorstTokenVariant::kPlain: {
      const std::size_t i = argmin(q);
      return {q[i], i};
    }
    case WorstTokenVariant::kMinAlt: {
      check_same_length(q, b);
      std::vector<double> penalized(q.begin(), q.end());
      for (std::size_t i = 0; i < q.size(); ++i) penalized[i] += cfg.d * b[i];
      const std::size_t i = argmin(penalized);
      return {penalized[i], i};
    }
    case WorstTokenVariant::kSoftmin: {
      if (!(cfg.temperature > 0.0)) throw ValidationError("softmin temperature must be > 0");
      const std::size_t worst = argmin(q);
      // exp((1 - q_i) / t) shifted by its maximum, which sits at the minimum q.
      double weight_sum = 0.0;
      double weighted = 0.0;
      for (double v : q) {
        const double w = std::exp((q[worst] - v) / cfg.temperature);
        weight_sum += w;
        weighted += w * v;
      }
      return {weighted / weight_sum, worst};
    }
  }
  return {};
}

SentenceScore score_sentence(SentenceMethod method, const SentenceEvidence& e,
                             const ScoreConfig& cfg) {
  switch (method) {
    case SentenceMethod::kPredictedDifference:
      return {score_predicted_difference(*e.probs, e.labels), std::nullopt};
    case SentenceMethod::kBadTokenCounts:
      return {score_bad_token_counts(e.q, e.b, BadTokenVariant::kPlain, cfg), std::nullopt};
    case SentenceMethod::kBadTokenCountsAvg:
      return {score_bad_token_counts(e.q, e.b, BadTokenVariant::kAvg, cfg), std::nullopt};
    case SentenceMethod::kBadTokenCountsMin:
      return {score_bad_token_counts(e.q, e.b, BadTokenVariant::kMin, cfg), std::nullopt};
    case SentenceMethod::kGoodFraction:
      return {score_good_fraction(e.b), std::nullopt};
    case SentenceMethod::kPenalizeBadTokens:
      return {score_penalize_bad_tokens(e.q, e.b), std::nullopt};
    case SentenceMethod::kAverageQuality:
      return {score_average_quality(e.q), std::nullopt};
    case SentenceMethod::kProduct:
      return {score_product(e.q, cfg), std::nullopt};
    case SentenceMethod::kExpectedBad:
      return {score_expected(e.q, ExpectedVariant::kBad, cfg), std::nullopt};
    case SentenceMethod::kExpectedAlt:
      return {score_expected(e.q, ExpectedVariant::kAlt, cfg), std::nullopt};
    case SentenceMethod::kWorstToken:
    case SentenceMethod::kWorstTokenMinAlt:
    case SentenceMethod::kWorstTokenSoftmin: {
      const auto variant = method == SentenceMethod::kWorstToken ? WorstTokenVariant::kPlain
                           : method == SentenceMethod::kWorstTokenMinAlt
                               ? WorstTokenVariant::kMinAlt
                               : WorstTokenVariant::kSoftmin;
      const auto w = score_worst_token(e.q, e.b, variant, cfg);
      return {w.score, w.index};
    }
  }
  throw ValidationError("unhandled sentence method");
}

std::string MethodSelection::label() const {
  std::string s(to_string(method));
  if (token_method && uses_token_score(method)) {
    s += "/";
    s += to_string(*token_method);
  }
  return s;
}

std::vector<MethodSelection> all_selections(std::span<const TokenMethod> token_methods) {
  std::vector<MethodSelection> out;
  for (SentenceMethod m : kAllSentenceMethods) {
    if (!uses_token_score(m)) {
      out.push_back({m, std::nullopt});
      continue;
    }
    for (TokenMethod t : token_methods) out.push_back({m, t});
  }
  return out;
}

std::vector<std::vector<int>> dataset_flags(const Dataset& ds) {
  const ClassThresholds t = class_thresholds(ds);
  std::vector<std::vector<int>> flags;
  flags.reserve(ds.sentences.size());
  for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
    flags.push_back(flag_tokens(ds.probs[i], ds.sentences[i].given_labels, t));
  }
  return flags;
}

std::vector<SentenceScoreRecord> score_dataset(const Dataset& ds,
                                               std::span<const MethodSelection> selections,
                                               const ScoreConfig& cfg) {
  cfg.validate();
  if (ds.sentences.empty()) return {};
  if (ds.probs.empty()) throw ValidationError("dataset has no probabilities to score");

  std::vector<std::size_t> by_id(ds.sentences.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return ds.sentences[a].id < ds.sentences[b].id;
  });

  const auto flags = dataset_flags(ds);
  // Token qualities are shared by every method using the same token score.
  std::vector<std::optional<std::vector<std::vector<double>>>> quality(
      std::size(kAllTokenMethods));
  auto quality_for = [&](TokenMethod t) -> const std::vector<std::vector<double>>& {
    auto& slot = quality[static_cast<std::size_t>(t)];
    if (!slot) {
      slot.emplace();
      slot->reserve(ds.sentences.size());
      for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
        slot->push_back(token_quality(t, ds.probs[i], ds.sentences[i].given_labels).q);
      }
    }
    return *slot;
  };

  std::vector<SentenceScoreRecord> out;
  out.reserve(selections.size() * ds.sentences.size());
  for (const auto& sel : selections) {
    const bool needs_q = uses_token_score(sel.method);
    if (needs_q && !sel.token_method) {
      throw ValidationError(std::string(to_string(sel.method)) + " needs a token score");
    }
    const auto* q = needs_q ? &quality_for(*sel.token_method) : nullptr;
    for (std::size_t i : by_id) {
      SentenceEvidence e;
      e.probs = &ds.probs[i];
      e.labels = ds.sentences[i].given_labels;
      e.b = flags[i];
      if (q) e.q = (*q)[i];
      const SentenceScore s = score_sentence(sel.method, e, cfg);
      out.push_back({ds.sentences[i].id, sel.method,
                     needs_q ? sel.token_method : std::nullopt, s.score, s.worst_token_index});
    }
  }
  return out;
}

std::vector<SentenceScoreRecord> score_all(const Dataset& ds,
                                           std::span<const TokenMethod> token_methods,
                                           const ScoreConfig& cfg) {
  const auto selections = all_selections(token_methods);
  return score_dataset(ds, selections, cfg);
}

}  // namespace tokenaudit
