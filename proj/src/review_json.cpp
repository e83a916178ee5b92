#include "tokenaudit/review_json.hpp"

#include "tokenaudit/io.hpp"

namespace tokenaudit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json review_to_json(const ReviewRecord& r) {
  ordered_json j;
  j["sentence_id"] = r.sentence_id;
  j["verdict"] = to_string(r.verdict);
  j["corrected_labels"] = r.corrected_labels ? ordered_json(*r.corrected_labels) : ordered_json();
  j["note"] = r.note ? ordered_json(*r.note) : ordered_json();
  j["timestamp"] = r.timestamp;
  return j;
}

ReviewRecord review_from_json(const json& j, SentenceId id, const LabelSpace& space) {
  if (!j.is_object()) throw ValidationError("review body must be a JSON object");
  ReviewRecord r;
  r.sentence_id = id;
  if (!j.contains("verdict") || !j.at("verdict").is_string()) {
    throw ValidationError("review body needs a string 'verdict'");
  }
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (j.contains("corrected_labels") && !j.at("corrected_labels").is_null()) {
    const auto& labels = j.at("corrected_labels");
    if (!labels.is_array()) throw ValidationError("corrected_labels must be an array");
    std::vector<ClassId> out;
    for (const auto& l : labels) {
      if (l.is_number_unsigned()) {
        out.push_back(l.get<ClassId>());
      } else if (l.is_string()) {
        const auto id_of = space.find(l.get<std::string>());
        if (!id_of) throw ValidationError("unknown class '" + l.get<std::string>() + "'");
        out.push_back(*id_of);
      } else {
        throw ValidationError("corrected_labels entries must be class indices or names");
      }
    }
    r.corrected_labels = std::move(out);
  }
  if (j.contains("note") && !j.at("note").is_null()) {
    if (!j.at("note").is_string()) throw ValidationError("note must be a string");
    r.note = j.at("note").get<std::string>();
  }
  if (j.contains("timestamp") && j.at("timestamp").is_string()) {
    r.timestamp = j.at("timestamp").get<std::string>();
  }
  return r;
}

ordered_json stats_to_json(const ReviewStats& s) {
  ordered_json j;
  j["total"] = s.total;
  j["reviewed"] = s.reviewed;
  j["correct"] = s.correct;
  j["mislabeled"] = s.mislabeled;
  j["skipped"] = s.skipped;
  j["fraction_reviewed"] = s.fraction_reviewed;
  j["precision_so_far"] = s.precision_so_far ? ordered_json(*s.precision_so_far) : ordered_json();
  return j;
}

ordered_json page_to_json(const SentencePage& p, const ListQuery& q) {
  ordered_json j;
  j["schema"] = kApiSchema;
  j["method"] = to_string(q.selection.method);
  j["token_method"] = q.selection.token_method && uses_token_score(q.selection.method)
                          ? ordered_json(to_string(*q.selection.token_method))
                          : ordered_json();
  j["total"] = p.total;
  j["offset"] = p.offset;
  j["limit"] = q.limit;
  ordered_json items = ordered_json::array();
  for (const auto& s : p.items) {
    ordered_json it;
    it["id"] = s.id;
    it["score"] = round_sig6(s.score);
    it["worst_token_index"] =
        s.worst_token_index ? ordered_json(*s.worst_token_index) : ordered_json();
    it["reviewed"] = s.verdict.has_value();
    it["verdict"] = s.verdict ? ordered_json(to_string(*s.verdict)) : ordered_json();
    it["text"] = s.text;
    items.push_back(std::move(it));
  }
  j["items"] = std::move(items);
  return j;
}

ordered_json detail_to_json(const SentenceDetail& d, const LabelSpace& space) {
  ordered_json j;
  j["schema"] = kApiSchema;
  j["id"] = d.id;
  j["text"] = d.text;
  j["token_method"] = to_string(d.token_method);
  ordered_json tokens = ordered_json::array();
  for (const auto& t : d.tokens) {
    ordered_json tj;
    tj["token"] = t.token;
    tj["given_label"] = t.given_label;
    tj["given_label_name"] = space.name(t.given_label);
    tj["quality"] = round_sig6(t.quality);
    tj["flagged"] = t.flagged;
    ordered_json top = ordered_json::array();
    for (const auto& [cls, prob] : t.top_predictions) {
      ordered_json pj;
      pj["label"] = cls;
      pj["label_name"] = space.name(cls);
      pj["probability"] = round_sig6(prob);
      top.push_back(std::move(pj));
    }
    tj["top_predictions"] = std::move(top);
    tokens.push_back(std::move(tj));
  }
  j["tokens"] = std::move(tokens);
  j["review"] = d.review ? review_to_json(*d.review) : ordered_json();
  return j;
}

}  // namespace tokenaudit
