#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenaudit/dataset.hpp"
#include "tokenaudit/sentence_scoring.hpp"

namespace tokenaudit {

enum class EvalUnit { kSentence, kToken };

std::string_view to_string(EvalUnit u);
EvalUnit parse_eval_unit(std::string_view name);

// Quality scores (higher = better) paired with ground-truth error flags.
// The detector ranks items by ascending quality; ties that must be broken
// are broken by ascending position.
struct EvalInput {
  std::vector<double> scores;
  std::vector<bool> positives;
  EvalUnit unit = EvalUnit::kSentence;

  std::size_t size() const { return scores.size(); }
  std::size_t positive_count() const;
};

// Probability that a random positive scores strictly lower than a random
// negative, ties counting one half. Throws ValidationError unless both
// classes are present.
double auroc(const EvalInput& e);

// Average precision over positives. Items with equal quality form one block
// and every positive in a block gets the precision at the end of the block.
double auprc(const EvalInput& e);

// Precision among the T lowest-quality items divided by the positive rate.
// T defaults to the number of positives.
double lift_at_errors(const EvalInput& e, std::optional<std::size_t> top_t = std::nullopt);

std::vector<std::pair<std::size_t, double>> precision_at_k(const EvalInput& e,
                                                           std::span<const std::size_t> ks);

struct PrPoint {
  double threshold = 0.0;  // quality score closing the block
  double recall = 0.0;
  double precision = 0.0;
};

// One point per tie block, in detection order.
std::vector<PrPoint> precision_recall_curve(const EvalInput& e);

struct MetricReport {
  std::string method;
  std::optional<std::string> token_method;
  EvalUnit unit = EvalUnit::kSentence;
  double auroc = 0.0;
  double auprc = 0.0;
  double lift_at_errors = 0.0;
  std::size_t top_t = 0;
  std::vector<std::pair<std::size_t, double>> precision_at_k;
  std::size_t n_positives = 0;
  std::size_t n_items = 0;
  std::vector<PrPoint> pr_curve;  // filled when requested
};

struct EvalOptions {
  std::optional<std::size_t> top_t;
  std::vector<std::size_t> ks;  // k values above the item count are dropped
  bool pr_curve = false;
};

MetricReport compute_metrics(const EvalInput& e, const EvalOptions& options);

// Sentence unit: positives are sentences with any mislabeled token.
// Token unit: positives are mislabeled tokens scored by their token quality
// (the sentence method is ignored).
std::vector<MetricReport> evaluate_methods(const Dataset& ds,
                                           std::span<const MethodSelection> selections,
                                           const ScoreConfig& cfg, EvalUnit unit,
                                           const EvalOptions& options);

MetricReport evaluate_method(const Dataset& ds, const MethodSelection& selection,
                             const ScoreConfig& cfg, EvalUnit unit,
                             const EvalOptions& options = {});

// cell(i, j): percentage of tokens with true class i given label j, i != j.
// Diagonal cells and rows without any true-class-i token are nullopt.
struct NoiseMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::size_t> row_support;
};

NoiseMatrix noise_matrix(const Dataset& ds);

}  // namespace tokenaudit
