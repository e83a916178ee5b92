#pragma once

// Score and metric files, plus aligned-text tables for humans.
//
// Score file, one record per line, fixed field order:
//   {"sentence_id": 3, "method": "worst-token", "token_method": "self-confidence",
//    "score": 0.0123, "worst_token_index": 4}
// token_method / worst_token_index are null when not applicable.
//
// Metric file, one record per (method, token method):
//   {"unit": "sentence", "method": ..., "token_method": ..., "auroc": ...,
//    "auprc": ..., "lift_at_errors": ..., "top_t": ..., "n_positives": ...,
//    "n_items": ..., "precision_at_k": [[k, p], ...], "pr_curve": [[threshold, recall, precision], ...]}
//
// Floats are written with 6 significant digits.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenaudit/evaluation.hpp"
#include "tokenaudit/sentence_scoring.hpp"

namespace tokenaudit {

void write_scores(std::ostream& out, const std::vector<SentenceScoreRecord>& records);
std::vector<SentenceScoreRecord> read_scores(std::istream& in);

enum class Metric { kAuroc, kAuprc, kLift };
inline constexpr Metric kAllMetrics[] = {Metric::kAuroc, Metric::kAuprc, Metric::kLift};
Metric parse_metric(std::string_view name);
std::string_view to_string(Metric m);

// Metrics not listed in `metrics` are left out of each record; reading such a
// record yields NaN for them.
void write_metric_reports(std::ostream& out, const std::vector<MetricReport>& reports,
                          std::span<const Metric> metrics = kAllMetrics);
std::vector<MetricReport> read_metric_reports(std::istream& in);

// Rows are method/token-method pairs in first-appearance order; one column
// per named report set (e.g. one per model).
void render_metric_table(std::ostream& out,
                         const std::vector<std::pair<std::string, std::vector<MetricReport>>>& columns,
                         Metric metric);

void render_noise_matrix(std::ostream& out, const NoiseMatrix& m);

}  // namespace tokenaudit
