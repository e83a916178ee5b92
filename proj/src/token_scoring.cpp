#include "tokenaudit/token_scoring.hpp"

#include <algorithm>
#include <cmath>

namespace tokenaudit {

namespace {

void check_shape(const ProbMatrix& p, std::span<const ClassId> labels) {
  if (p.rows() != labels.size()) {
    throw ValidationError("probability matrix has " + std::to_string(p.rows()) + " rows for " +
                          std::to_string(labels.size()) + " labels");
  }
  for (ClassId l : labels) {
    if (l >= p.cols()) throw ValidationError("label index " + std::to_string(l) + " out of range");
  }
}

// Normalized Shannon entropy in [0, 1], with 0 log 0 = 0.
double normalized_entropy(std::span<const double> row) {
  double h = 0.0;
  for (double v : row) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h / std::log(static_cast<double>(row.size()));
}

}  // namespace

std::string_view to_string(TokenMethod m) {
  switch (m) {
    case TokenMethod::kSelfConfidence: return "self-confidence";
    case TokenMethod::kNormalizedMargin: return "normalized-margin";
    case TokenMethod::kConfidenceWeightedEntropy: return "cwe";
  }
  return "self-confidence";
}

TokenMethod parse_token_method(std::string_view name) {
  for (TokenMethod m : kAllTokenMethods) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown token score '" + std::string(name) +
                        "' (valid: self-confidence, normalized-margin, cwe)");
}

TokenQualityVector self_confidence(const ProbMatrix& p, std::span<const ClassId> labels) {
  check_shape(p, labels);
  TokenQualityVector out{TokenMethod::kSelfConfidence, {}};
  out.q.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.q.push_back(p.at(i, labels[i]));
  return out;
}

TokenQualityVector normalized_margin(const ProbMatrix& p, std::span<const ClassId> labels) {
  check_shape(p, labels);
  if (p.cols() < 2) throw ValidationError("normalized margin needs at least two classes");
  TokenQualityVector out{TokenMethod::kNormalizedMargin, {}};
  out.q.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double best_other = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (j != labels[i]) best_other = std::max(best_other, p.at(i, j));
    }
    const double raw = p.at(i, labels[i]) - best_other;
    out.q.push_back(std::clamp((raw + 1.0) / 2.0, 0.0, 1.0));
  }
  return out;
}

TokenQualityVector confidence_weighted_entropy(const ProbMatrix& p,
                                               std::span<const ClassId> labels) {
  check_shape(p, labels);
  if (p.cols() < 2) throw ValidationError("confidence-weighted entropy needs at least two classes");
  TokenQualityVector out{TokenMethod::kConfidenceWeightedEntropy, {}};
  out.q.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double given = p.at(i, labels[i]);
    const double h = normalized_entropy(p.row(i));
    if (h <= 0.0) {
      out.q.push_back(given == 1.0 ? 1.0 : 0.0);
    } else {
      out.q.push_back(std::clamp(given / h, 0.0, 1.0));
    }
  }
  return out;
}

TokenQualityVector token_quality(TokenMethod method, const ProbMatrix& p,
                                 std::span<const ClassId> labels) {
  switch (method) {
    case TokenMethod::kSelfConfidence: return self_confidence(p, labels);
    case TokenMethod::kNormalizedMargin: return normalized_margin(p, labels);
    case TokenMethod::kConfidenceWeightedEntropy: return confidence_weighted_entropy(p, labels);
  }
  return self_confidence(p, labels);
}

ClassThresholds class_thresholds(std::span<const ProbMatrix> probs,
                                 std::span<const std::vector<ClassId>> labels) {
  if (probs.size() != labels.size()) {
    throw ValidationError("class_thresholds: probability and label lists differ in length");
  }
  const std::size_t k = probs.empty() ? 0 : probs.front().cols();
  ClassThresholds out{std::vector<double>(k, 0.0), std::vector<std::size_t>(k, 0)};
  for (std::size_t s = 0; s < probs.size(); ++s) {
    check_shape(probs[s], labels[s]);
    if (probs[s].cols() != k) throw ValidationError("class_thresholds: inconsistent class count");
    for (std::size_t i = 0; i < labels[s].size(); ++i) {
      const ClassId l = labels[s][i];
      out.t[l] += probs[s].at(i, l);
      ++out.support[l];
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (out.support[j] > 0) out.t[j] /= static_cast<double>(out.support[j]);
  }
  return out;
}

ClassThresholds class_thresholds(const Dataset& ds) {
  std::vector<std::vector<ClassId>> labels;
  labels.reserve(ds.sentences.size());
  for (const auto& s : ds.sentences) labels.push_back(s.given_labels);
  if (!ds.sentences.empty() && ds.probs.empty()) {
    throw ValidationError("dataset has no probabilities");
  }
  ClassThresholds t = class_thresholds(ds.probs, labels);
  if (t.t.empty()) {
    t.t.assign(ds.label_space.size(), 0.0);
    t.support.assign(ds.label_space.size(), 0);
  }
  return t;
}

std::vector<int> flag_tokens(const ProbMatrix& p, std::span<const ClassId> labels,
                             const ClassThresholds& t) {
  check_shape(p, labels);
  if (t.t.size() != p.cols()) throw ValidationError("thresholds do not match class count");
  std::vector<int> b(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = p.cols();
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (!t.usable(j) || p.at(i, j) < t.t[j]) continue;
      if (best == p.cols() || p.at(i, j) > p.at(i, best)) best = j;
    }
    b[i] = (best != p.cols() && best != labels[i]) ? 1 : 0;
  }
  return b;
}

}  // namespace tokenaudit
