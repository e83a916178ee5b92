#include "tokenaudit/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace tokenaudit {

namespace {

void check_input(const EvalInput& e) {
  if (e.scores.size() != e.positives.size()) {
    throw ValidationError("scores and ground-truth flags differ in length");
  }
}

// Item indices by ascending quality, ties by ascending index.
std::vector<std::size_t> detection_order(const EvalInput& e) {
  std::vector<std::size_t> order(e.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return e.scores[a] < e.scores[b]; });
  return order;
}

struct Block {
  double score;
  std::size_t positives;
  std::size_t negatives;
};

std::vector<Block> tie_blocks(const EvalInput& e) {
  std::vector<Block> blocks;
  for (std::size_t i : detection_order(e)) {
    if (blocks.empty() || blocks.back().score != e.scores[i]) {
      blocks.push_back({e.scores[i], 0, 0});
    }
    if (e.positives[i]) {
      ++blocks.back().positives;
    } else {
      ++blocks.back().negatives;
    }
  }
  return blocks;
}

std::size_t positives_in_top(const EvalInput& e, const std::vector<std::size_t>& order,
                             std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) hits += e.positives[order[r]] ? 1 : 0;
  return hits;
}

}  // namespace

std::string_view to_string(EvalUnit u) {
  return u == EvalUnit::kSentence ? "sentence" : "token";
}

EvalUnit parse_eval_unit(std::string_view name) {
  if (name == "sentence") return EvalUnit::kSentence;
  if (name == "token") return EvalUnit::kToken;
  throw ValidationError("unknown unit '" + std::string(name) + "' (expected sentence or token)");
}

std::size_t EvalInput::positive_count() const {
  return static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
}

double auroc(const EvalInput& e) {
  check_input(e);
  const std::size_t pos = e.positive_count();
  const std::size_t neg = e.size() - pos;
  if (pos == 0 || neg == 0) {
    throw ValidationError("AUROC needs at least one positive and one negative");
  }
  // Twice the Mann-Whitney count, kept integral so the only rounding is the
  // final division.
  unsigned long long twice_correct = 0;
  std::size_t negatives_below = 0;
  for (const Block& b : tie_blocks(e)) {
    const std::size_t negatives_above = neg - negatives_below - b.negatives;
    twice_correct += 2ULL * b.positives * negatives_above + 1ULL * b.positives * b.negatives;
    negatives_below += b.negatives;
  }
  return static_cast<double>(twice_correct) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double auprc(const EvalInput& e) {
  check_input(e);
  const std::size_t pos = e.positive_count();
  if (pos == 0) throw ValidationError("AUPRC needs at least one positive");
  double sum = 0.0;
  std::size_t seen = 0;
  std::size_t hits = 0;
  for (const Block& b : tie_blocks(e)) {
    seen += b.positives + b.negatives;
    hits += b.positives;
    if (b.positives > 0) {
      sum += static_cast<double>(b.positives) * static_cast<double>(hits) /
             static_cast<double>(seen);
    }
  }
  return sum / static_cast<double>(pos);
}

double lift_at_errors(const EvalInput& e, std::optional<std::size_t> top_t) {
  check_input(e);
  const std::size_t pos = e.positive_count();
  if (pos == 0) throw ValidationError("lift needs at least one positive");
  const std::size_t t = top_t.value_or(pos);
  if (t == 0 || t > e.size()) {
    throw ValidationError("top-T of " + std::to_string(t) + " outside 1.." +
                          std::to_string(e.size()));
  }
  const auto order = detection_order(e);
  const double precision =
      static_cast<double>(positives_in_top(e, order, t)) / static_cast<double>(t);
  const double base_rate = static_cast<double>(pos) / static_cast<double>(e.size());
  return precision / base_rate;
}

std::vector<std::pair<std::size_t, double>> precision_at_k(const EvalInput& e,
                                                           std::span<const std::size_t> ks) {
  check_input(e);
  const auto order = detection_order(e);
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(ks.size());
  for (std::size_t k : ks) {
    if (k == 0 || k > e.size()) {
      throw ValidationError("k = " + std::to_string(k) + " outside 1.." +
                            std::to_string(e.size()));
    }
    out.emplace_back(k, static_cast<double>(positives_in_top(e, order, k)) /
                            static_cast<double>(k));
  }
  return out;
}

std::vector<PrPoint> precision_recall_curve(const EvalInput& e) {
  check_input(e);
  const std::size_t pos = e.positive_count();
  if (pos == 0) throw ValidationError("precision-recall curve needs at least one positive");
  std::vector<PrPoint> out;
  std::size_t seen = 0;
  std::size_t hits = 0;
  for (const Block& b : tie_blocks(e)) {
    seen += b.positives + b.negatives;
    hits += b.positives;
    out.push_back({b.score, static_cast<double>(hits) / static_cast<double>(pos),
                   static_cast<double>(hits) / static_cast<double>(seen)});
  }
  return out;
}

MetricReport compute_metrics(const EvalInput& e, const EvalOptions& options) {
  MetricReport r;
  r.unit = e.unit;
  r.n_items = e.size();
  r.n_positives = e.positive_count();
  r.auroc = auroc(e);
  r.auprc = auprc(e);
  r.top_t = options.top_t.value_or(r.n_positives);
  r.lift_at_errors = lift_at_errors(e, r.top_t);
  std::vector<std::size_t> ks;
  for (std::size_t k : options.ks) {
    if (k >= 1 && k <= e.size()) ks.push_back(k);
  }
  r.precision_at_k = precision_at_k(e, ks);
  if (options.pr_curve) r.pr_curve = precision_recall_curve(e);
  return r;
}

std::vector<MetricReport> evaluate_methods(const Dataset& ds,
                                           std::span<const MethodSelection> selections,
                                           const ScoreConfig& cfg, EvalUnit unit,
                                           const EvalOptions& options) {
  const ErrorMarks marks = mark_errors(ds);
  std::vector<std::size_t> by_id(ds.sentences.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return ds.sentences[a].id < ds.sentences[b].id;
  });

  std::vector<MetricReport> reports;
  if (unit == EvalUnit::kToken) {
    if (ds.probs.empty()) throw ValidationError("dataset has no probabilities to score");
    for (const auto& sel : selections) {
      const TokenMethod tm = sel.token_method.value_or(TokenMethod::kSelfConfidence);
      EvalInput e{{}, {}, EvalUnit::kToken};
      for (std::size_t i : by_id) {
        const auto q = token_quality(tm, ds.probs[i], ds.sentences[i].given_labels).q;
        e.scores.insert(e.scores.end(), q.begin(), q.end());
        e.positives.insert(e.positives.end(), marks.tokens[i].begin(), marks.tokens[i].end());
      }
      MetricReport r = compute_metrics(e, options);
      r.method = "token";
      r.token_method = std::string(to_string(tm));
      reports.push_back(std::move(r));
    }
    return reports;
  }

  std::map<SentenceId, bool> positive_by_id;
  for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
    positive_by_id[ds.sentences[i].id] = marks.sentences[i];
  }
  const auto records = score_dataset(ds, selections, cfg);
  const std::size_t n = ds.sentences.size();
  for (std::size_t s = 0; s < selections.size(); ++s) {
    EvalInput e{{}, {}, EvalUnit::kSentence};
    e.scores.reserve(n);
    e.positives.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& rec = records[s * n + i];
      e.scores.push_back(rec.score);
      e.positives.push_back(positive_by_id.at(rec.sentence_id));
    }
    MetricReport r = compute_metrics(e, options);
    r.method = std::string(to_string(selections[s].method));
    if (uses_token_score(selections[s].method) && selections[s].token_method) {
      r.token_method = std::string(to_string(*selections[s].token_method));
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

MetricReport evaluate_method(const Dataset& ds, const MethodSelection& selection,
                             const ScoreConfig& cfg, EvalUnit unit, const EvalOptions& options) {
  return evaluate_methods(ds, std::span(&selection, 1), cfg, unit, options).front();
}

NoiseMatrix noise_matrix(const Dataset& ds) {
  const std::size_t k = ds.label_space.size();
  std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k, 0));
  std::vector<std::size_t> support(k, 0);
  for (const auto& s : ds.sentences) {
    if (!s.true_labels) {
      throw ValidationError("sentence " + std::to_string(s.id) + " has no true labels");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const ClassId t = (*s.true_labels)[i];
      ++support[t];
      ++counts[t][s.given_labels[i]];
    }
  }
  NoiseMatrix m;
  m.classes = ds.label_space.names();
  m.row_support = support;
  m.cells.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    if (support[i] == 0) continue;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      m.cells[i][j] = 100.0 * static_cast<double>(counts[i][j]) / static_cast<double>(support[i]);
    }
  }
  return m;
}

}  // namespace tokenaudit
