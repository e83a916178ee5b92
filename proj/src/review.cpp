#include "tokenaudit/review.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include "tokenaudit/io.hpp"
#include "tokenaudit/review_json.hpp"
#include "tokenaudit/token_scoring.hpp"

namespace tokenaudit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

void fsync_path(const std::filesystem::path& path, int flags) {
  const int fd = ::open(path.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kCorrect: return "correct";
    case Verdict::kMislabeled: return "mislabeled";
    case Verdict::kSkipped: return "skipped";
  }
  return "correct";
}

Verdict parse_verdict(std::string_view name) {
  if (name == "correct") return Verdict::kCorrect;
  if (name == "mislabeled") return Verdict::kMislabeled;
  if (name == "skipped") return Verdict::kSkipped;
  throw ValidationError("unknown verdict '" + std::string(name) +
                        "' (valid: correct, mislabeled, skipped)");
}

SortKey parse_sort_key(std::string_view name) {
  if (name == "score") return SortKey::kScore;
  if (name == "id") return SortKey::kId;
  throw ValidationError("unknown sort '" + std::string(name) + "' (valid: score, id)");
}

ReviewFilter parse_review_filter(std::string_view name) {
  if (name == "all") return ReviewFilter::kAll;
  if (name == "unreviewed") return ReviewFilter::kUnreviewed;
  if (name == "reviewed") return ReviewFilter::kReviewed;
  throw ValidationError("unknown filter '" + std::string(name) +
                        "' (valid: all, unreviewed, reviewed)");
}

std::string fingerprint_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ReviewState load_state(const std::filesystem::path& path, const std::string& fingerprint) {
  ReviewState state;
  state.fingerprint = fingerprint;
  if (!std::filesystem::exists(path)) return state;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read review state file '" + path.string() + "'");
  std::string stored_fingerprint;
  try {
    const json j = json::parse(in);
    if (j.at("schema") != kReviewStateSchema) throw ValidationError("unexpected schema");
    stored_fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& r : j.at("records")) {
      ReviewRecord rec;
      rec.sentence_id = r.at("sentence_id").get<SentenceId>();
      rec.verdict = parse_verdict(r.at("verdict").get<std::string>());
      if (r.contains("corrected_labels") && !r.at("corrected_labels").is_null()) {
        rec.corrected_labels = r.at("corrected_labels").get<std::vector<ClassId>>();
      }
      if (r.contains("note") && !r.at("note").is_null()) rec.note = r.at("note").get<std::string>();
      rec.timestamp = r.value("timestamp", "");
      state.records[rec.sentence_id] = std::move(rec);
    }
  } catch (const std::exception& e) {
    throw Error("corrupt review state file '" + path.string() + "': " + e.what());
  }
  if (stored_fingerprint != fingerprint) {
    throw ConflictError("review state file '" + path.string() +
                        "' belongs to a different dataset (fingerprint " + stored_fingerprint +
                        ")");
  }
  return state;
}

void save_state(const std::filesystem::path& path, const ReviewState& state) {
  ordered_json j;
  j["schema"] = kReviewStateSchema;
  j["fingerprint"] = state.fingerprint;
  ordered_json records = ordered_json::array();
  for (const auto& [id, r] : state.records) records.push_back(review_to_json(r));
  j["records"] = std::move(records);

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write review state '" + tmp.string() + "'");
    out << j.dump(1) << '\n';
    out.flush();
    if (!out) throw Error("write failed for review state '" + tmp.string() + "'");
  }
  fsync_path(tmp, O_RDONLY);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot replace review state '" + path.string() + "': " + ec.message());
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  fsync_path(dir, O_RDONLY | O_DIRECTORY);
}

// --- ReviewService ----------------------------------------------------------

ReviewService::ReviewService(Dataset dataset, std::string dataset_fingerprint,
                             const std::vector<SentenceScoreRecord>& scores,
                             std::filesystem::path state_path)
    : dataset_(std::move(dataset)),
      fingerprint_(std::move(dataset_fingerprint)),
      state_path_(std::move(state_path)) {
  if (!dataset_.sentences.empty() && dataset_.probs.empty()) {
    throw ValidationError("dataset has no probabilities");
  }
  for (std::size_t i = 0; i < dataset_.sentences.size(); ++i) {
    index_[dataset_.sentences[i].id] = i;
    texts_.push_back(detokenize(dataset_.sentences[i].tokens).text);
  }
  if (!dataset_.sentences.empty()) flags_ = dataset_flags(dataset_);

  for (const auto& r : scores) {
    if (!index_.contains(r.sentence_id)) {
      throw ValidationError("score file refers to unknown sentence " +
                            std::to_string(r.sentence_id));
    }
    MethodSelection sel{r.method, uses_token_score(r.method) ? r.token_method : std::nullopt};
    auto it = std::find(selections_.begin(), selections_.end(), sel);
    std::size_t slot = static_cast<std::size_t>(it - selections_.begin());
    if (it == selections_.end()) {
      selections_.push_back(sel);
      scores_.emplace_back();
    }
    scores_[slot][r.sentence_id] = {r.score, r.worst_token_index};
  }
  state_ = load_state(state_path_, fingerprint_);
  for (const auto& [id, rec] : state_.records) {
    if (!index_.contains(id)) {
      throw Error("review state file '" + state_path_.string() + "' refers to unknown sentence " +
                  std::to_string(id));
    }
  }
}

std::vector<MethodSelection> ReviewService::methods() const { return selections_; }

std::size_t ReviewService::index_of(SentenceId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("no sentence with id " + std::to_string(id));
  return it->second;
}

SentencePage ReviewService::list_sentences(const ListQuery& query) const {
  MethodSelection wanted = query.selection;
  if (!uses_token_score(wanted.method)) wanted.token_method.reset();
  auto it = std::find(selections_.begin(), selections_.end(), wanted);
  if (it == selections_.end()) {
    std::string available;
    for (const auto& s : selections_) available += (available.empty() ? "" : ", ") + s.label();
    throw NotFoundError("no scores for " + wanted.label() + " (available: " + available + ")");
  }
  const auto& scores = scores_[static_cast<std::size_t>(it - selections_.begin())];

  std::shared_lock lock(mutex_);
  std::vector<SentenceSummary> matching;
  for (const auto& [id, entry] : scores) {
    auto rec = state_.records.find(id);
    const bool reviewed = rec != state_.records.end();
    if (query.filter == ReviewFilter::kReviewed && !reviewed) continue;
    if (query.filter == ReviewFilter::kUnreviewed && reviewed) continue;
    SentenceSummary s;
    s.id = id;
    s.score = entry.score;
    s.worst_token_index = entry.worst_token_index;
    if (reviewed) s.verdict = rec->second.verdict;
    s.text = texts_[index_of(id)];
    matching.push_back(std::move(s));
  }
  // The map iterates by ascending id; a stable sort keeps id order in ties.
  if (query.sort == SortKey::kScore) {
    std::stable_sort(matching.begin(), matching.end(),
                     [](const SentenceSummary& a, const SentenceSummary& b) {
                       return a.score < b.score;
                     });
  }
  SentencePage page;
  page.total = matching.size();
  page.offset = query.offset;
  if (query.offset < matching.size()) {
    const std::size_t end = std::min(matching.size(), query.offset + query.limit);
    page.items.assign(std::make_move_iterator(matching.begin() + query.offset),
                      std::make_move_iterator(matching.begin() + end));
  }
  return page;
}

SentenceDetail ReviewService::get_sentence(SentenceId id, TokenMethod token_method) const {
  const std::size_t i = index_of(id);
  const auto& s = dataset_.sentences[i];
  const auto& p = dataset_.probs[i];
  const auto q = token_quality(token_method, p, s.given_labels).q;

  SentenceDetail d;
  d.id = id;
  d.text = texts_[i];
  d.token_method = token_method;
  for (std::size_t t = 0; t < s.size(); ++t) {
    TokenDetail td;
    td.token = s.tokens[t];
    td.given_label = s.given_labels[t];
    td.quality = q[t];
    td.flagged = flags_[i][t];
    std::vector<std::pair<ClassId, double>> ranked;
    for (ClassId j = 0; j < p.cols(); ++j) ranked.emplace_back(j, p.at(t, j));
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    ranked.resize(std::min<std::size_t>(3, ranked.size()));
    td.top_predictions = std::move(ranked);
    d.tokens.push_back(std::move(td));
  }
  d.review = review_for(id);
  return d;
}

std::optional<ReviewRecord> ReviewService::review_for(SentenceId id) const {
  std::shared_lock lock(mutex_);
  auto it = state_.records.find(id);
  if (it == state_.records.end()) return std::nullopt;
  return it->second;
}

void ReviewService::validate_record(const ReviewRecord& r) const {
  const auto& s = dataset_.sentences[index_of(r.sentence_id)];
  if (r.corrected_labels) {
    if (r.corrected_labels->size() != s.size()) {
      throw ValidationError("corrected_labels has " + std::to_string(r.corrected_labels->size()) +
                            " entries, sentence has " + std::to_string(s.size()) + " tokens");
    }
    for (ClassId l : *r.corrected_labels) {
      if (l >= dataset_.label_space.size()) {
        throw ValidationError("corrected label index " + std::to_string(l) + " out of range");
      }
    }
  }
  if (r.verdict == Verdict::kMislabeled && !r.corrected_labels &&
      (!r.note || r.note->empty())) {
    throw ValidationError("a mislabeled verdict needs corrected_labels or a note");
  }
}

ReviewStats ReviewService::submit_review(ReviewRecord record,
                                         const std::optional<std::string>& fingerprint) {
  if (fingerprint && *fingerprint != fingerprint_) {
    throw ConflictError("dataset fingerprint mismatch: service holds " + fingerprint_);
  }
  validate_record(record);
  if (record.timestamp.empty()) record.timestamp = utc_timestamp_now();

  std::unique_lock lock(mutex_);
  ReviewState next = state_;
  next.records[record.sentence_id] = std::move(record);
  save_state(state_path_, next);
  state_ = std::move(next);
  return stats_locked();
}

ReviewStats ReviewService::stats() const {
  std::shared_lock lock(mutex_);
  return stats_locked();
}

ReviewStats ReviewService::stats_locked() const {
  ReviewStats s;
  s.total = dataset_.sentences.size();
  for (const auto& [id, r] : state_.records) {
    ++s.reviewed;
    switch (r.verdict) {
      case Verdict::kCorrect: ++s.correct; break;
      case Verdict::kMislabeled: ++s.mislabeled; break;
      case Verdict::kSkipped: ++s.skipped; break;
    }
  }
  s.fraction_reviewed =
      s.total == 0 ? 0.0 : static_cast<double>(s.reviewed) / static_cast<double>(s.total);
  if (s.correct + s.mislabeled > 0) {
    s.precision_so_far =
        static_cast<double>(s.mislabeled) / static_cast<double>(s.correct + s.mislabeled);
  }
  return s;
}

Dataset ReviewService::corrected_dataset() const {
  Dataset out = dataset_;
  std::shared_lock lock(mutex_);
  for (const auto& [id, r] : state_.records) {
    if (r.verdict == Verdict::kMislabeled && r.corrected_labels) {
      out.sentences[index_of(id)].given_labels = *r.corrected_labels;
    }
  }
  return out;
}

void ReviewService::export_corrected(const std::filesystem::path& path) const {
  write_dataset(path, corrected_dataset());
}

}  // namespace tokenaudit
