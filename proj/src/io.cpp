#include "tokenaudit/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace tokenaudit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
}

std::vector<CharSpan> spans_from_json(const json& j) {
  std::vector<CharSpan> spans;
  spans.reserve(j.size());
  for (const auto& s : j) {
    if (!s.is_array() || s.size() != 2) throw ValidationError("span must be a [begin, end] pair");
    spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
  }
  return spans;
}

ProbMatrix rows_from_json(const json& j) {
  return ProbMatrix::FromRows(j.get<std::vector<std::vector<double>>>());
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json record = parse_line(line, line_no);
    try {
      fn(record, line_no);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

}  // namespace

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  return in;
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  bool header_seen = false;
  std::size_t with_probs = 0;
  std::vector<ProbMatrix> probs;
  for_each_record(in, [&](const json& r, std::size_t) {
    if (!header_seen) {
      if (!r.contains("schema") || r.at("schema") != kDatasetSchema) {
        throw ValidationError(std::string("missing header with schema ") + kDatasetSchema);
      }
      ds.label_space = LabelSpace::FromNames(r.at("classes").get<std::vector<std::string>>());
      header_seen = true;
      return;
    }
    TokenizedSentence s;
    s.id = r.at("id").get<SentenceId>();
    s.tokens = r.at("tokens").get<std::vector<std::string>>();
    s.given_labels = r.at("given_labels").get<std::vector<ClassId>>();
    if (r.contains("true_labels")) s.true_labels = r.at("true_labels").get<std::vector<ClassId>>();
    if (r.contains("char_spans")) {
      s.char_spans = spans_from_json(r.at("char_spans"));
    } else {
      s.char_spans = detokenize(s.tokens).spans;
    }
    validate_sentence(s, ds.label_space);
    if (r.contains("probs")) {
      ++with_probs;
      probs.emplace_back(s.size(), ds.label_space.size(),
                         r.at("probs").get<std::vector<double>>());
    }
    ds.sentences.push_back(std::move(s));
  });
  if (!header_seen) throw ParseError("empty dataset file (no header line)");
  if (with_probs != 0 && with_probs != ds.sentences.size()) {
    throw ValidationError("only " + std::to_string(with_probs) + " of " +
                          std::to_string(ds.sentences.size()) + " sentences carry probabilities");
  }
  ds.probs = std::move(probs);
  ds.validate();
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_dataset(in);
  } catch (const FileError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  ordered_json header;
  header["schema"] = kDatasetSchema;
  header["classes"] = ds.label_space.names();
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
    const auto& s = ds.sentences[i];
    ordered_json r;
    r["id"] = s.id;
    r["tokens"] = s.tokens;
    r["given_labels"] = s.given_labels;
    if (s.true_labels) r["true_labels"] = *s.true_labels;
    if (!ds.probs.empty()) r["probs"] = ds.probs[i].values();
    ordered_json spans = ordered_json::array();
    for (const auto& sp : s.char_spans) spans.push_back({sp.begin, sp.end});
    r["char_spans"] = std::move(spans);
    out << r.dump() << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  write_dataset(out, ds);
  out.flush();
  if (!out) throw FileError("write failed for '" + path.string() + "'");
}

std::map<SentenceId, ProbMatrix> read_word_probs(std::istream& in) {
  std::map<SentenceId, ProbMatrix> out;
  for_each_record(in, [&](const json& r, std::size_t line_no) {
    const auto id = r.at("id").get<SentenceId>();
    if (!out.emplace(id, rows_from_json(r.at("probs"))).second) {
      throw ParseError("duplicate id " + std::to_string(id), line_no);
    }
  });
  return out;
}

std::map<SentenceId, SubwordProbs> read_subword_probs(std::istream& in) {
  std::map<SentenceId, SubwordProbs> out;
  for_each_record(in, [&](const json& r, std::size_t line_no) {
    SubwordProbs sp;
    sp.spans = spans_from_json(r.at("spans"));
    sp.values = rows_from_json(r.at("probs"));
    if (sp.values.rows() != sp.spans.size()) {
      throw ValidationError("spans and probability rows differ in length");
    }
    for (std::size_t i = 0; i < sp.spans.size(); ++i) {
      if (sp.spans[i].end <= sp.spans[i].begin) throw ValidationError("empty subword span");
      if (i > 0 && sp.spans[i].begin < sp.spans[i - 1].end) {
        throw ValidationError("subword spans unsorted or overlapping");
      }
    }
    const auto id = r.at("id").get<SentenceId>();
    if (!out.emplace(id, std::move(sp)).second) {
      throw ParseError("duplicate id " + std::to_string(id), line_no);
    }
  });
  return out;
}

double round_sig6(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace tokenaudit
