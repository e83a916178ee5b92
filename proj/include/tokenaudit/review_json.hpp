#pragma once

// JSON forms of review types, shared by the state file and the HTTP API.

#include "json.hpp"
#include "tokenaudit/review.hpp"

namespace tokenaudit {

inline constexpr const char* kApiSchema = "tokenaudit.review-api/1";

nlohmann::ordered_json review_to_json(const ReviewRecord& r);

// Accepts corrected labels as class indices or class names. Throws
// ValidationError on malformed input.
ReviewRecord review_from_json(const nlohmann::json& j, SentenceId id, const LabelSpace& space);

nlohmann::ordered_json stats_to_json(const ReviewStats& s);
nlohmann::ordered_json page_to_json(const SentencePage& p, const ListQuery& q);
nlohmann::ordered_json detail_to_json(const SentenceDetail& d, const LabelSpace& space);

}  // namespace tokenaudit
