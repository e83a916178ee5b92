#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenaudit/dataset.hpp"
#include "tokenaudit/sentence_scoring.hpp"

namespace tokenaudit {

enum class Verdict { kCorrect, kMislabeled, kSkipped };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view name);

struct ReviewRecord {
  SentenceId sentence_id = 0;
  Verdict verdict = Verdict::kCorrect;
  std::optional<std::vector<ClassId>> corrected_labels;
  std::optional<std::string> note;
  std::string timestamp;  // ISO 8601 UTC

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

// Reviewer verdicts for one dataset, at most one per sentence.
struct ReviewState {
  std::string fingerprint;
  std::map<SentenceId, ReviewRecord> records;
};

inline constexpr const char* kReviewStateSchema = "tokenaudit.review-state/1";

// SHA-256 of the file contents, lowercase hex.
std::string fingerprint_file(const std::filesystem::path& path);

// A missing file yields an empty state bound to `fingerprint`. An unreadable
// or malformed file throws Error naming it; a state recorded against another
// dataset throws ConflictError.
ReviewState load_state(const std::filesystem::path& path, const std::string& fingerprint);

// Writes to a sibling temporary file, syncs it and renames it over `path`.
void save_state(const std::filesystem::path& path, const ReviewState& state);

std::string utc_timestamp_now();

enum class SortKey { kScore, kId };
enum class ReviewFilter { kAll, kUnreviewed, kReviewed };

SortKey parse_sort_key(std::string_view name);
ReviewFilter parse_review_filter(std::string_view name);

struct ListQuery {
  SortKey sort = SortKey::kScore;
  MethodSelection selection;
  std::size_t offset = 0;
  std::size_t limit = 50;
  ReviewFilter filter = ReviewFilter::kAll;
};

struct SentenceSummary {
  SentenceId id = 0;
  double score = 0.0;
  std::optional<std::size_t> worst_token_index;
  std::optional<Verdict> verdict;
  std::string text;
};

struct SentencePage {
  std::size_t total = 0;  // sentences matching the filter
  std::size_t offset = 0;
  std::vector<SentenceSummary> items;
};

struct TokenDetail {
  std::string token;
  ClassId given_label = 0;
  double quality = 0.0;
  int flagged = 0;
  std::vector<std::pair<ClassId, double>> top_predictions;  // best three
};

struct SentenceDetail {
  SentenceId id = 0;
  std::string text;
  TokenMethod token_method = TokenMethod::kSelfConfidence;
  std::vector<TokenDetail> tokens;
  std::optional<ReviewRecord> review;
};

struct ReviewStats {
  std::size_t total = 0;
  std::size_t reviewed = 0;
  std::size_t correct = 0;
  std::size_t mislabeled = 0;
  std::size_t skipped = 0;
  double fraction_reviewed = 0.0;
  // mislabeled / (correct + mislabeled); nullopt before any decision.
  std::optional<double> precision_so_far;
};

// Review workflow over a scored dataset. Reads may run concurrently; writes
// are serialized and durably persisted before they return.
class ReviewService {
 public:
  ReviewService(Dataset dataset, std::string dataset_fingerprint,
                const std::vector<SentenceScoreRecord>& scores, std::filesystem::path state_path);

  const Dataset& dataset() const { return dataset_; }
  const std::string& fingerprint() const { return fingerprint_; }

  // Selections present in the score file, in file order.
  std::vector<MethodSelection> methods() const;

  // Throws NotFoundError naming the available methods when the selection has
  // no scores.
  SentencePage list_sentences(const ListQuery& query) const;

  // Throws NotFoundError for an unknown id.
  SentenceDetail get_sentence(SentenceId id, TokenMethod token_method) const;

  // Validates, stamps a missing timestamp, persists and returns new stats.
  // `fingerprint`, when given, must match the loaded dataset.
  ReviewStats submit_review(ReviewRecord record,
                            const std::optional<std::string>& fingerprint = std::nullopt);

  ReviewStats stats() const;
  std::optional<ReviewRecord> review_for(SentenceId id) const;

  // Given labels replaced by corrected labels of mislabeled verdicts.
  Dataset corrected_dataset() const;
  void export_corrected(const std::filesystem::path& path) const;

 private:
  struct ScoreEntry {
    double score;
    std::optional<std::size_t> worst_token_index;
  };

  std::size_t index_of(SentenceId id) const;
  void validate_record(const ReviewRecord& r) const;
  ReviewStats stats_locked() const;

  Dataset dataset_;
  std::string fingerprint_;
  std::filesystem::path state_path_;
  std::map<SentenceId, std::size_t> index_;
  std::vector<std::string> texts_;
  std::vector<std::vector<int>> flags_;
  std::vector<MethodSelection> selections_;
  std::vector<std::map<SentenceId, ScoreEntry>> scores_;  // parallel to selections_

  mutable std::shared_mutex mutex_;
  ReviewState state_;
};

}  // namespace tokenaudit
