#include "tokenaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "json.hpp"
#include "tokenaudit/io.hpp"

namespace tokenaudit {

using json = nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// Six significant digits, formatted directly: json's own float printing
// does not always pick the shortest form.
std::string sig6(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// One JSON object on one line, fields in insertion order.
class Line {
 public:
  Line& raw(std::string_view key, std::string_view value) {
    body_ += body_.size() > 1 ? "," : "";
    body_ += json(std::string(key)).dump();
    body_ += ':';
    body_ += value;
    return *this;
  }
  Line& str(std::string_view key, std::string_view v) { return raw(key, json(std::string(v)).dump()); }
  Line& num(std::string_view key, double v) { return raw(key, sig6(v)); }
  Line& count(std::string_view key, long long v) { return raw(key, std::to_string(v)); }
  std::string done() const { return body_ + "}"; }

 private:
  std::string body_ = "{";
};

}  // namespace

void write_scores(std::ostream& out, const std::vector<SentenceScoreRecord>& records) {
  for (const auto& r : records) {
    Line line;
    line.count("sentence_id", r.sentence_id).str("method", to_string(r.method));
    if (r.token_method) {
      line.str("token_method", to_string(*r.token_method));
    } else {
      line.raw("token_method", "null");
    }
    line.num("score", r.score);
    if (r.worst_token_index) {
      line.count("worst_token_index", static_cast<long long>(*r.worst_token_index));
    } else {
      line.raw("worst_token_index", "null");
    }
    out << line.done() << '\n';
  }
}

std::vector<SentenceScoreRecord> read_scores(std::istream& in) {
  std::vector<SentenceScoreRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      SentenceScoreRecord r;
      r.sentence_id = j.at("sentence_id").get<SentenceId>();
      r.method = parse_sentence_method(j.at("method").get<std::string>());
      if (!j.at("token_method").is_null()) {
        r.token_method = parse_token_method(j.at("token_method").get<std::string>());
      }
      r.score = j.at("score").get<double>();
      if (!j.at("worst_token_index").is_null()) {
        r.worst_token_index = j.at("worst_token_index").get<std::size_t>();
      }
      out.push_back(r);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad score record: ") + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void write_metric_reports(std::ostream& out, const std::vector<MetricReport>& reports,
                          std::span<const Metric> metrics) {
  auto wanted = [&](Metric m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
  };
  for (const auto& r : reports) {
    Line line;
    line.str("unit", to_string(r.unit)).str("method", r.method);
    if (r.token_method) {
      line.str("token_method", *r.token_method);
    } else {
      line.raw("token_method", "null");
    }
    if (wanted(Metric::kAuroc)) line.num("auroc", r.auroc);
    if (wanted(Metric::kAuprc)) line.num("auprc", r.auprc);
    if (wanted(Metric::kLift)) line.num("lift_at_errors", r.lift_at_errors);
    line.count("top_t", static_cast<long long>(r.top_t));
    line.count("n_positives", static_cast<long long>(r.n_positives));
    line.count("n_items", static_cast<long long>(r.n_items));
    std::string pk = "[";
    for (const auto& [k, p] : r.precision_at_k) {
      pk += (pk.size() > 1 ? ",[" : "[") + std::to_string(k) + "," + sig6(p) + "]";
    }
    line.raw("precision_at_k", pk + "]");
    if (!r.pr_curve.empty()) {
      std::string pr = "[";
      for (const auto& pt : r.pr_curve) {
        pr += (pr.size() > 1 ? ",[" : "[") + sig6(pt.threshold) + "," + sig6(pt.recall) + "," +
              sig6(pt.precision) + "]";
      }
      line.raw("pr_curve", pr + "]");
    }
    out << line.done() << '\n';
  }
}

std::vector<MetricReport> read_metric_reports(std::istream& in) {
  std::vector<MetricReport> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      MetricReport r;
      r.unit = parse_eval_unit(j.at("unit").get<std::string>());
      r.method = j.at("method").get<std::string>();
      if (!j.at("token_method").is_null()) r.token_method = j.at("token_method").get<std::string>();
      const auto metric = [&](const char* key) {
        return j.contains(key) && j[key].is_number() ? j[key].get<double>()
                                                     : std::numeric_limits<double>::quiet_NaN();
      };
      r.auroc = metric("auroc");
      r.auprc = metric("auprc");
      r.lift_at_errors = metric("lift_at_errors");
      r.top_t = j.at("top_t").get<std::size_t>();
      r.n_positives = j.at("n_positives").get<std::size_t>();
      r.n_items = j.at("n_items").get<std::size_t>();
      for (const auto& pk : j.at("precision_at_k")) {
        r.precision_at_k.emplace_back(pk.at(0).get<std::size_t>(), pk.at(1).get<double>());
      }
      if (j.contains("pr_curve")) {
        for (const auto& pt : j.at("pr_curve")) {
          r.pr_curve.push_back({pt.at(0).get<double>(), pt.at(1).get<double>(),
                                pt.at(2).get<double>()});
        }
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad metric record: ") + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

Metric parse_metric(std::string_view name) {
  if (name == "auroc") return Metric::kAuroc;
  if (name == "auprc") return Metric::kAuprc;
  if (name == "lift") return Metric::kLift;
  throw ValidationError("unknown metric '" + std::string(name) + "' (valid: auroc, auprc, lift)");
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kAuroc: return "auroc";
    case Metric::kAuprc: return "auprc";
    case Metric::kLift: return "lift";
  }
  return "auprc";
}

void render_metric_table(
    std::ostream& out,
    const std::vector<std::pair<std::string, std::vector<MetricReport>>>& columns,
    Metric metric) {
  using Key = std::pair<std::string, std::string>;
  std::vector<Key> rows;
  std::vector<std::map<Key, double>> values(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (const auto& r : columns[c].second) {
      Key key{r.method, r.token_method.value_or("")};
      if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
      values[c][key] = metric == Metric::kAuroc   ? r.auroc
                       : metric == Metric::kAuprc ? r.auprc
                                                  : r.lift_at_errors;
    }
  }
  const int decimals = metric == Metric::kLift ? 2 : 4;

  std::size_t w_method = std::string_view("Sentence Score").size();
  std::size_t w_token = std::string_view("Token Score").size();
  for (const auto& [m, t] : rows) {
    w_method = std::max(w_method, m.size());
    w_token = std::max(w_token, t.size());
  }
  std::vector<std::size_t> w_col;
  for (const auto& col : columns) w_col.push_back(std::max<std::size_t>(col.first.size(), 8));

  out << pad("Sentence Score", w_method) << "  " << pad("Token Score", w_token);
  for (std::size_t c = 0; c < columns.size(); ++c) out << "  " << lpad(columns[c].first, w_col[c]);
  out << '\n';
  std::size_t total = w_method + 2 + w_token;
  for (auto w : w_col) total += 2 + w;
  const std::string rule(total, '-');
  out << rule << '\n';

  std::string previous;
  for (const auto& key : rows) {
    if (!previous.empty() && previous != key.first) out << rule << '\n';
    out << pad(previous == key.first ? "" : key.first, w_method) << "  " << pad(key.second, w_token);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto it = values[c].find(key);
      const bool missing = it == values[c].end() || std::isnan(it->second);
      out << "  " << lpad(missing ? "" : fixed(it->second, decimals), w_col[c]);
    }
    out << '\n';
    previous = key.first;
  }
}

void render_noise_matrix(std::ostream& out, const NoiseMatrix& m) {
  std::size_t w_name = 0;
  for (const auto& c : m.classes) w_name = std::max(w_name, c.size());
  std::size_t w_cell = 7;
  for (const auto& c : m.classes) w_cell = std::max(w_cell, c.size());

  out << pad("", w_name);
  for (const auto& c : m.classes) out << "  " << lpad(c, w_cell);
  out << '\n';
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    out << pad(m.classes[i], w_name);
    for (std::size_t j = 0; j < m.classes.size(); ++j) {
      std::string cell;
      if (i == j) {
        cell = "-";
      } else if (!m.cells[i][j]) {
        cell = "n/a";
      } else if (*m.cells[i][j] > 0.0) {
        cell = fixed(*m.cells[i][j], 2) + "%";
      }
      out << "  " << lpad(cell, w_cell);
    }
    out << '\n';
  }
}

}  // namespace tokenaudit
