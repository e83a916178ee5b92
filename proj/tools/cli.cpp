#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokenaudit/dataset.hpp"
#include "tokenaudit/evaluation.hpp"
#include "tokenaudit/io.hpp"
#include "tokenaudit/pooling.hpp"
#include "tokenaudit/report.hpp"
#include "tokenaudit/review.hpp"
#include "tokenaudit/review_server.hpp"
#include "tokenaudit/sentence_scoring.hpp"

namespace tokenaudit::cli {

namespace {

constexpr const char* kConfigEnv = "TOKENAUDIT_CONFIG";

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Writes to the -o file when given, otherwise to `out`.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(out);
    out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw FileError("cannot write '" + path + "'");
  fn(file);
  file.flush();
  if (!file) throw FileError("write failed for '" + path + "'");
}

struct ScoreFlags {
  std::string config_path;
  std::optional<double> epsilon;
  std::optional<double> c;
  std::optional<int> J;
  std::optional<double> d;
  std::optional<double> temperature;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path,
                    std::string("JSON file with score hyperparameters (default: $") + kConfigEnv +
                        ")");
    app->add_option("--epsilon", epsilon, "Tie-break weight for bad-token-counts-avg/min");
    app->add_option("--c", c, "Offset inside the log for product");
    app->add_option("--J", J, "Number of worst tokens for expected-bad/alt");
    app->add_option("--d", d, "Flag penalty for worst-token-min-alt");
    app->add_option("--temperature", temperature, "Softmin temperature for worst-token-softmin");
  }

  ScoreConfig resolve() const {
    ScoreConfig cfg;
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) path = env;
    }
    if (!path.empty()) {
      auto in = open_input(path);
      try {
        const auto j = nlohmann::json::parse(in);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.c = j.value("c", cfg.c);
        cfg.J = j.value("J", cfg.J);
        cfg.d = j.value("d", cfg.d);
        cfg.temperature = j.value("temperature", cfg.temperature);
      } catch (const nlohmann::json::exception& e) {
        throw Error("config '" + path + "': " + e.what());
      }
    }
    if (epsilon) cfg.epsilon = *epsilon;
    if (c) cfg.c = *c;
    if (J) cfg.J = *J;
    if (d) cfg.d = *d;
    if (temperature) cfg.temperature = *temperature;
    cfg.validate();
    return cfg;
  }
};

std::vector<MethodSelection> resolve_selections(const std::string& method,
                                                const std::string& token_score) {
  std::vector<TokenMethod> token_methods;
  if (token_score == "all") {
    token_methods.assign(std::begin(kAllTokenMethods), std::end(kAllTokenMethods));
  } else {
    token_methods.push_back(parse_token_method(token_score));
  }
  if (method == "all") return all_selections(token_methods);
  const SentenceMethod m = parse_sentence_method(method);
  std::vector<MethodSelection> out;
  if (!uses_token_score(m)) {
    out.push_back({m, std::nullopt});
  } else {
    for (TokenMethod t : token_methods) out.push_back({m, t});
  }
  return out;
}

std::vector<std::size_t> default_ks() {
  std::vector<std::size_t> ks;
  for (std::size_t k = 10; k <= 300; k += 10) ks.push_back(k);
  return ks;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string conll;
  std::string truth;
  std::string labels;
  std::string subword_probs;
  std::string word_probs;
  std::string pool = "average";
  bool merge = false;
  bool no_preprocess = false;
  std::string output;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.subword_probs.empty() && !a.word_probs.empty()) {
    throw UsageError("--subword-probs and --word-probs are mutually exclusive");
  }
  const LabelSpace space = a.labels.empty() ? LabelSpace::ConllUnmerged()
                                            : LabelSpace::FromNames(split_commas(a.labels));
  // Open every input up front so a missing file fails before any work.
  auto conll_in = open_input(a.conll);
  std::optional<std::ifstream> truth_in, sub_in, word_in;
  if (!a.truth.empty()) truth_in = open_input(a.truth);
  if (!a.subword_probs.empty()) sub_in = open_input(a.subword_probs);
  if (!a.word_probs.empty()) word_in = open_input(a.word_probs);
  const PoolStrategy strategy = parse_pool_strategy(a.pool);

  auto with_file = [](const std::string& path, auto&& fn) {
    try {
      return fn();
    } catch (const FileError&) {
      throw;
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  };

  Dataset ds;
  ds.label_space = space;
  ds.sentences = with_file(a.conll, [&] { return parse_conll(conll_in, space); });
  const std::size_t parsed = ds.sentences.size();
  if (truth_in) {
    const auto truth = with_file(a.truth, [&] { return parse_conll(*truth_in, space); });
    attach_truth(ds.sentences, truth);
  }
  if (!a.no_preprocess) ds.sentences = preprocess(std::move(ds.sentences));
  const std::size_t dropped = parsed - ds.sentences.size();

  if (sub_in) {
    const auto subwords = with_file(a.subword_probs, [&] { return read_subword_probs(*sub_in); });
    attach_pooled_probs(ds, subwords, strategy);
  } else if (word_in) {
    const auto words = with_file(a.word_probs, [&] { return read_word_probs(*word_in); });
    for (const auto& s : ds.sentences) {
      auto it = words.find(s.id);
      if (it == words.end()) {
        throw ValidationError(a.word_probs + ": no probabilities for sentence " +
                              std::to_string(s.id));
      }
      ds.probs.push_back(it->second);
    }
  }
  if (a.merge) ds = merge_prefixes(ds);
  ds.validate();

  emit(a.output, out, [&](std::ostream& o) { write_dataset(o, ds); });
  err << "parsed " << parsed << " sentences, dropped " << dropped << " in preprocessing, wrote "
      << ds.sentences.size() << " (" << ds.label_space.size() << " classes"
      << (ds.probs.empty() ? ", no probabilities" : "") << ")\n";
  return kExitOk;
}

// --- pool -------------------------------------------------------------------

int cmd_pool(const std::string& dataset_path, const std::string& subword_path,
             const std::string& strategy_name, const std::string& output, std::ostream& out,
             std::ostream& err) {
  Dataset ds = read_dataset(dataset_path);
  auto sub_in = open_input(subword_path);
  const PoolStrategy strategy = parse_pool_strategy(strategy_name);
  std::map<SentenceId, SubwordProbs> subwords;
  try {
    subwords = read_subword_probs(sub_in);
  } catch (const Error& e) {
    throw Error(subword_path + ": " + e.what());
  }
  attach_pooled_probs(ds, subwords, strategy);
  ds.validate();
  emit(output, out, [&](std::ostream& o) { write_dataset(o, ds); });
  err << "pooled " << ds.sentences.size() << " sentences (" << to_string(strategy) << ")\n";
  return kExitOk;
}

// --- score ------------------------------------------------------------------

int cmd_score(const std::string& dataset_path, const std::string& method,
              const std::string& token_score, const ScoreFlags& flags, const std::string& output,
              std::ostream& out, std::ostream& err) {
  const ScoreConfig cfg = flags.resolve();
  const auto selections = resolve_selections(method, token_score);
  const Dataset ds = read_dataset(dataset_path);
  const auto records = score_dataset(ds, selections, cfg);
  emit(output, out, [&](std::ostream& o) { write_scores(o, records); });
  err << "scored " << ds.sentences.size() << " sentences with " << selections.size()
      << " method combination(s)\n";
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string dataset;
  std::string method = "all";
  std::string token_score = "all";
  std::string unit = "sentence";
  std::string metrics;
  std::optional<std::size_t> top_t;
  std::string ks;
  bool pr_curve = false;
  std::string format = "jsonl";
  std::string output;
};

int cmd_eval(const EvalArgs& a, const ScoreFlags& flags, std::ostream& out, std::ostream& err) {
  const ScoreConfig cfg = flags.resolve();
  const EvalUnit unit = parse_eval_unit(a.unit);
  std::vector<Metric> metrics;
  for (const auto& m : split_commas(a.metrics.empty() ? "auroc,auprc,lift" : a.metrics)) {
    metrics.push_back(parse_metric(m));
  }
  if (a.format != "jsonl" && a.format != "table") {
    throw UsageError("--format must be jsonl or table");
  }
  std::vector<MethodSelection> selections;
  if (unit == EvalUnit::kToken) {
    std::vector<TokenMethod> tms;
    if (a.token_score == "all") {
      tms.assign(std::begin(kAllTokenMethods), std::end(kAllTokenMethods));
    } else {
      tms.push_back(parse_token_method(a.token_score));
    }
    for (TokenMethod t : tms) selections.push_back({SentenceMethod::kWorstToken, t});
  } else {
    selections = resolve_selections(a.method, a.token_score);
  }

  EvalOptions options;
  options.top_t = a.top_t;
  options.pr_curve = a.pr_curve || unit == EvalUnit::kToken;
  if (a.ks.empty()) {
    options.ks = default_ks();
  } else {
    for (const auto& k : split_commas(a.ks)) {
      try {
        options.ks.push_back(static_cast<std::size_t>(std::stoul(k)));
      } catch (const std::exception&) {
        throw UsageError("--k expects comma-separated positive integers");
      }
    }
  }

  const Dataset ds = read_dataset(a.dataset);
  if (!ds.has_truth()) {
    throw ValidationError(a.dataset +
                          ": sentences lack true_labels; ingest with --truth <corrected CoNLL "
                          "file> to evaluate");
  }
  auto reports = evaluate_methods(ds, selections, cfg, unit, options);

  emit(a.output, out, [&](std::ostream& o) {
    if (a.format == "table") {
      for (Metric m : metrics) {
        o << "[" << to_string(m) << ", unit=" << to_string(unit) << ", n=" << ds.sentences.size()
          << " sentences]\n";
        render_metric_table(o, {{"value", reports}}, m);
        o << '\n';
      }
      return;
    }
    write_metric_reports(o, reports, metrics);
  });
  err << "evaluated " << reports.size() << " method combination(s) over "
      << (reports.empty() ? 0 : reports.front().n_items) << " " << to_string(unit) << "s ("
      << (reports.empty() ? 0 : reports.front().n_positives) << " with label errors)\n";
  return kExitOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::vector<std::string>& evals, const std::string& metric_name,
               bool noise, const std::string& dataset_path, const std::string& output,
               std::ostream& out) {
  if (noise) {
    if (dataset_path.empty()) throw UsageError("--noise-matrix requires --dataset");
    const Dataset ds = read_dataset(dataset_path);
    const NoiseMatrix m = noise_matrix(ds);
    emit(output, out, [&](std::ostream& o) { render_noise_matrix(o, m); });
    return kExitOk;
  }
  if (evals.empty()) throw UsageError("report needs --eval NAME=FILE or --noise-matrix");
  const Metric metric = parse_metric(metric_name);
  std::vector<std::pair<std::string, std::vector<MetricReport>>> columns;
  for (const auto& spec : evals) {
    const auto eq = spec.find('=');
    const std::string name = eq == std::string::npos ? spec : spec.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    auto in = open_input(path);
    try {
      columns.emplace_back(name, read_metric_reports(in));
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  }
  emit(output, out, [&](std::ostream& o) { render_metric_table(o, columns, metric); });
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string dataset;
  std::string scores;
  std::string state;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_dir;
  std::string export_path;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  const std::string fingerprint = fingerprint_file(a.dataset);
  Dataset ds = read_dataset(a.dataset);
  auto scores_in = open_input(a.scores);
  std::vector<SentenceScoreRecord> scores;
  try {
    scores = read_scores(scores_in);
  } catch (const Error& e) {
    throw Error(a.scores + ": " + e.what());
  }
  ReviewService service(std::move(ds), fingerprint, scores, a.state);

  ServerOptions options;
  options.host = a.host;
  options.port = a.port;
  if (!a.ui_dir.empty()) options.ui_dir = a.ui_dir;
  options.default_export_path =
      a.export_path.empty() ? std::filesystem::path(a.state).replace_extension(".export.jsonl")
                            : std::filesystem::path(a.export_path);
  ReviewServer server(service, options);

  // SIGINT / SIGTERM stop the server from a dedicated thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind();
  std::thread waiter([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  waiter.detach();

  out << "listening on http://" << a.host << ":" << port << std::endl;
  err << "serving " << service.dataset().sentences.size() << " sentences, "
      << service.stats().reviewed << " already reviewed (state: " << a.state << ")\n";
  server.run();
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Find sentences with label errors in token classification data"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "CoNLL files -> canonical dataset file");
  ingest_cmd->add_option("--conll", ingest.conll, "CoNLL/IOB2 file with the given labels")
      ->required();
  ingest_cmd->add_option("--truth", ingest.truth, "CoNLL file with corrected (true) labels");
  ingest_cmd->add_option("--labels", ingest.labels,
                         "Comma-separated class names in probability column order "
                         "(default: CoNLL-2003 IOB2 classes)");
  ingest_cmd->add_option("--subword-probs", ingest.subword_probs,
                         "Subword probability file to pool onto words");
  ingest_cmd->add_option("--word-probs", ingest.word_probs, "Word-level probability file");
  ingest_cmd->add_option("--pool", ingest.pool, "Pooling: average, weighted or first");
  ingest_cmd->add_flag("--merge-prefixes", ingest.merge, "Collapse B-/I- prefixes");
  ingest_cmd->add_flag("--no-preprocess", ingest.no_preprocess, "Skip sentence cleanup");
  ingest_cmd->add_option("-o,--output", ingest.output, "Output file (default: stdout)");

  std::string pool_dataset, pool_subwords, pool_strategy = "average", pool_output;
  auto* pool_cmd = app.add_subcommand("pool", "Attach pooled subword probabilities to a dataset");
  pool_cmd->add_option("--dataset", pool_dataset, "Canonical dataset file")->required();
  pool_cmd->add_option("--subword-probs", pool_subwords, "Subword probability file")->required();
  pool_cmd->add_option("--strategy", pool_strategy, "average, weighted or first");
  pool_cmd->add_option("-o,--output", pool_output, "Output file (default: stdout)");

  std::string score_dataset_path, score_method = "worst-token", score_token = "self-confidence";
  std::string score_output;
  ScoreFlags score_flags;
  auto* score_cmd = app.add_subcommand("score", "Score sentences");
  score_cmd->add_option("--dataset", score_dataset_path, "Canonical dataset file")->required();
  score_cmd->add_option("--method", score_method, "Sentence method name or 'all'");
  score_cmd->add_option("--token-score", score_token,
                        "self-confidence, normalized-margin, cwe or 'all'");
  score_cmd->add_option("-o,--output", score_output, "Output file (default: stdout)");
  score_flags.add_to(score_cmd);

  EvalArgs eval;
  ScoreFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate scores against true labels");
  eval_cmd->add_option("--dataset", eval.dataset, "Canonical dataset file with true labels")
      ->required();
  eval_cmd->add_option("--method", eval.method, "Sentence method name or 'all'");
  eval_cmd->add_option("--token-score", eval.token_score,
                       "self-confidence, normalized-margin, cwe or 'all'");
  eval_cmd->add_option("--unit", eval.unit, "sentence or token");
  eval_cmd->add_option("--metrics", eval.metrics, "Comma-separated subset of auroc,auprc,lift");
  eval_cmd->add_option("--top-t", eval.top_t, "T for lift (default: number of label errors)");
  eval_cmd->add_option("--k", eval.ks, "Comma-separated K values for precision@K");
  eval_cmd->add_flag("--pr-curve", eval.pr_curve, "Include precision-recall points");
  eval_cmd->add_option("--format", eval.format, "jsonl or table");
  eval_cmd->add_option("-o,--output", eval.output, "Output file (default: stdout)");
  eval_flags.add_to(eval_cmd);

  std::vector<std::string> report_evals;
  std::string report_metric = "auprc", report_dataset, report_output;
  bool report_noise = false;
  auto* report_cmd = app.add_subcommand("report", "Render evaluation files as text tables");
  report_cmd->add_option("--eval", report_evals, "NAME=FILE metric file (repeatable)");
  report_cmd->add_option("--metric", report_metric, "auroc, auprc or lift");
  report_cmd->add_flag("--noise-matrix", report_noise, "Print the label noise matrix");
  report_cmd->add_option("--dataset", report_dataset, "Dataset for --noise-matrix");
  report_cmd->add_option("-o,--output", report_output, "Output file (default: stdout)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the review HTTP service");
  serve_cmd->add_option("--dataset", serve.dataset, "Canonical dataset file")->required();
  serve_cmd->add_option("--scores", serve.scores, "Score file from 'score'")->required();
  serve_cmd->add_option("--state", serve.state, "Review state file")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Directory with the review UI bundle");
  serve_cmd->add_option("--export-path", serve.export_path, "Default export destination");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out, err);
    if (*pool_cmd) return cmd_pool(pool_dataset, pool_subwords, pool_strategy, pool_output, out, err);
    if (*score_cmd) {
      return cmd_score(score_dataset_path, score_method, score_token, score_flags, score_output,
                       out, err);
    }
    if (*eval_cmd) return cmd_eval(eval, eval_flags, out, err);
    if (*report_cmd) {
      return cmd_report(report_evals, report_metric, report_noise, report_dataset, report_output,
                        out);
    }
    if (*serve_cmd) return cmd_serve(serve, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace tokenaudit::cli
