#pragma once

// Line-delimited record files shared by every CLI stage.
//
// Canonical dataset file (schema "tokenaudit.dataset/1"):
//   line 1: {"schema": "tokenaudit.dataset/1", "classes": [...]}
//   then one sentence per line:
//     {"id": 7, "tokens": [...], "given_labels": [...], "true_labels": [...],
//      "probs": [row-major n*K floats], "char_spans": [[b, e], ...]}
//   "true_labels" and "probs" are optional; when one sentence carries probs,
//   all must.
//
// Word probability file: {"id": 7, "probs": [[...], ...]} per line, n rows.
// Subword probability file: {"id": 7, "spans": [[b, e], ...],
//   "probs": [[...], ...]} per line, m rows aligned with spans.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "tokenaudit/dataset.hpp"
#include "tokenaudit/pooling.hpp"

namespace tokenaudit {

inline constexpr const char* kDatasetSchema = "tokenaudit.dataset/1";

Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

// Full-precision floats; output is a deterministic function of the dataset.
void write_dataset(std::ostream& out, const Dataset& ds);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);

std::map<SentenceId, ProbMatrix> read_word_probs(std::istream& in);
std::map<SentenceId, SubwordProbs> read_subword_probs(std::istream& in);

// Rounds to 6 significant digits for report and score files.
double round_sig6(double x);

// Opens a file for reading; throws Error naming the path when it fails.
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace tokenaudit
