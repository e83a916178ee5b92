#include "tokenaudit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "tokenaudit/text.hpp"

namespace tokenaudit {

namespace {

constexpr std::string_view kDocStart = "-DOCSTART-";

// Tokens made only of these never get a space before / after them.
constexpr std::array<std::string_view, 9> kClosing = {",", ".", ";", ":", "!",
                                                      "?", ")", "’", "”"};
constexpr std::array<std::string_view, 3> kOpening = {"(", "‘", "“"};

template <std::size_t N>
bool consists_of(std::string_view token, const std::array<std::string_view, N>& set) {
  if (token.empty()) return false;
  while (!token.empty()) {
    bool matched = false;
    for (std::string_view p : set) {
      if (token.starts_with(p)) {
        token.remove_prefix(p.size());
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace

// --- LabelSpace -------------------------------------------------------------

LabelSpace LabelSpace::FromNames(std::vector<std::string> names) {
  LabelSpace space;
  std::unordered_set<std::string> seen;
  bool has_other = false;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& n = names[i];
    if (n.empty()) throw ValidationError("empty class name");
    if (!seen.insert(n).second) throw ValidationError("duplicate class name '" + n + "'");
    if (n == "O") {
      space.other_class_ = i;
      has_other = true;
    }
    if (n.size() > 2 && (n[0] == 'B' || n[0] == 'I') && n[1] == '-') {
      space.prefixes_.push_back(n[0]);
      space.types_.push_back(n.substr(2));
    } else {
      space.prefixes_.push_back('\0');
      space.types_.push_back(n);
    }
  }
  if (!has_other) throw ValidationError("label space has no 'O' class");
  space.names_ = std::move(names);
  return space;
}

LabelSpace LabelSpace::ConllUnmerged() {
  return FromNames({"O", "B-MISC", "I-MISC", "B-PER", "I-PER", "B-ORG", "I-ORG",
                    "B-LOC", "I-LOC"});
}

std::optional<ClassId> LabelSpace::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<ClassId>(it - names_.begin());
}

bool LabelSpace::has_prefixes() const {
  return std::any_of(prefixes_.begin(), prefixes_.end(), [](char c) { return c != '\0'; });
}

LabelSpace LabelSpace::merged(std::vector<ClassId>* mapping) const {
  std::vector<std::string> merged_names;
  std::vector<ClassId> map(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    auto it = std::find(merged_names.begin(), merged_names.end(), types_[i]);
    if (it == merged_names.end()) {
      map[i] = merged_names.size();
      merged_names.push_back(types_[i]);
    } else {
      map[i] = static_cast<ClassId>(it - merged_names.begin());
    }
  }
  if (mapping) *mapping = std::move(map);
  return FromNames(std::move(merged_names));
}

// --- ProbMatrix -------------------------------------------------------------

ProbMatrix::ProbMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("probability matrix has " + std::to_string(values_.size()) +
                          " entries, expected " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
  if (cols_ == 0 && rows_ > 0) throw ValidationError("probability matrix has no columns");
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("probability row " + std::to_string(i) +
                              " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg << "probability row " << i << " sums to " << sum;
      throw ValidationError(msg.str());
    }
  }
}

ProbMatrix ProbMatrix::FromRows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ValidationError("ragged probability rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return ProbMatrix(rows.size(), cols, std::move(values));
}

// --- Dataset ----------------------------------------------------------------

void validate_sentence(const TokenizedSentence& s, const LabelSpace& space) {
  const std::string where = "sentence " + std::to_string(s.id) + ": ";
  const std::size_t n = s.tokens.size();
  if (n == 0) throw ValidationError(where + "no tokens");
  if (s.given_labels.size() != n || s.char_spans.size() != n) {
    throw ValidationError(where + "tokens, labels and spans differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (s.char_spans[i].end <= s.char_spans[i].begin) {
      throw ValidationError(where + "empty char span at token " + std::to_string(i));
    }
    if (i > 0 && s.char_spans[i].begin < s.char_spans[i - 1].end) {
      throw ValidationError(where + "overlapping char spans at token " + std::to_string(i));
    }
  }
  auto check_labels = [&](const std::vector<ClassId>& labels, const char* kind) {
    for (ClassId l : labels) {
      if (l >= space.size()) {
        throw ValidationError(where + kind + " label index " + std::to_string(l) +
                              " out of range");
      }
    }
  };
  check_labels(s.given_labels, "given");
  if (s.true_labels) {
    if (s.true_labels->size() != n) throw ValidationError(where + "true labels length mismatch");
    check_labels(*s.true_labels, "true");
  }
}

bool Dataset::has_truth() const {
  return std::all_of(sentences.begin(), sentences.end(),
                     [](const TokenizedSentence& s) { return s.true_labels.has_value(); });
}

void Dataset::validate() const {
  std::unordered_set<SentenceId> ids;
  for (const auto& s : sentences) {
    validate_sentence(s, label_space);
    if (!ids.insert(s.id).second) {
      throw ValidationError("duplicate sentence id " + std::to_string(s.id));
    }
  }
  if (probs.empty()) return;
  if (probs.size() != sentences.size()) {
    throw ValidationError("probability matrices do not match sentence count");
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (probs[i].rows() != sentences[i].size() || probs[i].cols() != label_space.size()) {
      throw ValidationError("sentence " + std::to_string(sentences[i].id) +
                            ": probability matrix shape mismatch");
    }
  }
}

// --- Text -------------------------------------------------------------------

Detokenized detokenize(std::span<const std::string> tokens) {
  Detokenized out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !consists_of(tokens[i], kClosing) && !consists_of(tokens[i - 1], kOpening)) {
      out.text.push_back(' ');
      ++pos;
    }
    const std::size_t len = utf8_length(tokens[i]);
    out.spans.push_back({pos, pos + len});
    out.text += tokens[i];
    pos += len;
  }
  return out;
}

std::string normalize_all_caps(std::string_view token) {
  std::size_t letters = 0;
  for (unsigned char c : token) {
    if (c >= 'a' && c <= 'z') return std::string(token);
    if (c >= 'A' && c <= 'Z') ++letters;
  }
  if (letters < 2) return std::string(token);
  std::string out(token);
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] >= 'A' && out[i] <= 'Z') out[i] = static_cast<char>(out[i] - 'A' + 'a');
  }
  return out;
}

std::vector<TokenizedSentence> parse_conll(std::istream& in, const LabelSpace& space) {
  std::vector<TokenizedSentence> sentences;
  TokenizedSentence current;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = static_cast<SentenceId>(sentences.size());
    current.char_spans = detokenize(current.tokens).spans;
    sentences.push_back(std::move(current));
    current = TokenizedSentence{};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    const auto fields = split_ws(line);
    if (fields.front() == kDocStart) {
      flush();
      continue;
    }
    if (fields.size() < 2) throw ParseError("expected a token and a label column", line_no);
    const auto label = space.find(fields.back());
    if (!label) {
      throw ParseError("unknown label '" + std::string(fields.back()) + "'", line_no);
    }
    current.tokens.emplace_back(fields.front());
    current.given_labels.push_back(*label);
  }
  flush();
  return sentences;
}

std::vector<TokenizedSentence> parse_conll(std::string_view text, const LabelSpace& space) {
  std::istringstream in{std::string(text)};
  return parse_conll(in, space);
}

void write_conll(std::ostream& out, std::span<const TokenizedSentence> sentences,
                 const LabelSpace& space) {
  bool first = true;
  for (const auto& s : sentences) {
    if (!first) out << '\n';
    first = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.tokens[i] << ' ' << space.name(s.given_labels[i]) << '\n';
    }
  }
}

void attach_truth(std::vector<TokenizedSentence>& sentences,
                  const std::vector<TokenizedSentence>& truth) {
  if (sentences.size() != truth.size()) {
    throw ValidationError("truth file has " + std::to_string(truth.size()) +
                          " sentences, labels file has " + std::to_string(sentences.size()));
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].tokens != truth[i].tokens) {
      throw ValidationError("sentence " + std::to_string(sentences[i].id) +
                            ": tokens differ between labels and truth files");
    }
    sentences[i].true_labels = truth[i].given_labels;
  }
}

std::vector<TokenizedSentence> preprocess(std::vector<TokenizedSentence> sentences) {
  std::vector<TokenizedSentence> kept;
  kept.reserve(sentences.size());
  for (auto& s : sentences) {
    const bool has_hash = std::any_of(s.tokens.begin(), s.tokens.end(), [](const std::string& t) {
      return t.find('#') != std::string::npos;
    });
    if (has_hash) continue;
    for (auto& t : s.tokens) t = normalize_all_caps(t);
    Detokenized d = detokenize(s.tokens);
    if (utf8_length(d.text) <= 1) continue;
    s.char_spans = std::move(d.spans);
    kept.push_back(std::move(s));
  }
  return kept;
}

// --- Label transforms -------------------------------------------------------

Dataset merge_prefixes(const Dataset& ds) {
  if (!ds.label_space.has_prefixes()) {
    throw ValidationError("label space has no B-/I- prefixes to merge");
  }
  std::vector<ClassId> map;
  Dataset out;
  out.label_space = ds.label_space.merged(&map);
  out.sentences = ds.sentences;
  for (auto& s : out.sentences) {
    for (auto& l : s.given_labels) l = map[l];
    if (s.true_labels) {
      for (auto& l : *s.true_labels) l = map[l];
    }
  }
  const std::size_t k = out.label_space.size();
  out.probs.reserve(ds.probs.size());
  for (const auto& p : ds.probs) {
    std::vector<double> values(p.rows() * k, 0.0);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::size_t j = 0; j < p.cols(); ++j) values[i * k + map[j]] += p.at(i, j);
    }
    out.probs.emplace_back(p.rows(), k, std::move(values));
  }
  return out;
}

std::size_t ErrorMarks::sentence_count() const {
  return static_cast<std::size_t>(std::count(sentences.begin(), sentences.end(), true));
}

std::size_t ErrorMarks::token_count() const {
  std::size_t n = 0;
  for (const auto& t : tokens) n += static_cast<std::size_t>(std::count(t.begin(), t.end(), true));
  return n;
}

ErrorMarks mark_errors(const Dataset& ds) {
  ErrorMarks marks;
  marks.sentences.reserve(ds.sentences.size());
  marks.tokens.reserve(ds.sentences.size());
  for (const auto& s : ds.sentences) {
    if (!s.true_labels) {
      throw ValidationError("sentence " + std::to_string(s.id) + " has no true labels");
    }
    std::vector<bool> flags(s.size());
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      flags[i] = s.given_labels[i] != (*s.true_labels)[i];
      any = any || flags[i];
    }
    marks.sentences.push_back(any);
    marks.tokens.push_back(std::move(flags));
  }
  return marks;
}

}  // namespace tokenaudit
