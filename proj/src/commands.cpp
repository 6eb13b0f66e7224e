#include "uglad/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "uglad/bench.hpp"
#include "uglad/csv.hpp"
#include "uglad/json_io.hpp"
#include "uglad/parallel.hpp"
#include "uglad/random.hpp"
#include "uglad/synthetic.hpp"

namespace fs = std::filesystem;

namespace uglad {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir + "': " + ec.message());
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> csv_files(const std::string& dir) {
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path().string());
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot list '" + dir + "': " + ec.message());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::IoError, "no .csv files in '" + dir + "'");
  return files;
}

// Re-raises an error attributed to a column with that column's name.
[[noreturn]] void rethrow_named(const Error& e, const std::vector<std::string>& features) {
  if (e.feature() && *e.feature() < features.size()) {
    throw Error(e.code(), std::string(e.what()) + " (feature '" + features[*e.feature()] + "')", e.feature());
  }
  throw;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidThreshold:
      return 2;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NoConvergence:
      return 4;
    default:
      return 3;
  }
}

void cmd_simulate(const SimulateOptions& opt, std::ostream& log) {
  const auto start = Clock::now();
  if (opt.d < 2) throw Error(ErrorCode::InvalidArgument, "d must be >= 2");
  if (!(opt.p >= 0.0 && opt.p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must lie in [0, 1]");
  if (opt.samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  if (!(opt.dropout >= 0.0 && opt.dropout < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  if (opt.tasks < 1) throw Error(ErrorCode::InvalidArgument, "tasks must be >= 1");
  if (opt.out_dir.empty()) throw Error(ErrorCode::InvalidArgument, "an output directory is required");

  ensure_dir(opt.out_dir);
  const fs::path out(opt.out_dir);
  if (opt.tasks > 1) ensure_dir((out / "data").string());

  std::vector<GroundTruth> truths;
  std::string written;
  for (std::size_t k = 0; k < opt.tasks; ++k) {
    truths.push_back(generate_precision(opt.d, opt.p, derive_seed(opt.seed, Stream::Graph, k)));
    Dataset x = sample_mvn(truths.back(), opt.samples, derive_seed(opt.seed, Stream::Samples, k));
    if (opt.dropout > 0.0) x = inject_dropout(x, opt.dropout, derive_seed(opt.seed, Stream::Dropout, k));
    char name[32];
    std::snprintf(name, sizeof name, "task_%02zu.csv", k + 1);
    const fs::path file = opt.tasks > 1 ? out / "data" / name : out / "data.csv";
    const std::string text = format_csv(x);
    write_file(file.string(), text);
    written += text;
  }
  const std::vector<std::string> features = default_feature_names(opt.d);
  write_json((out / "truth.json").string(), truth_to_json(truths, features));

  Manifest m;
  m.command = "simulate";
  m.config = Json{{"d", opt.d}, {"p", opt.p}, {"samples", opt.samples}, {"dropout", opt.dropout}, {"tasks", opt.tasks}};
  m.seed = opt.seed;
  m.input_fingerprint = fingerprint(written);
  m.duration_seconds = seconds_since(start);
  write_json((out / "manifest.json").string(), manifest_to_json(m));
  log << "wrote " << opt.tasks << " dataset(s) of " << opt.samples << "x" << opt.d << " to " << opt.out_dir << "\n";
}

void cmd_fit(const FitOptions& opt, std::ostream& log) {
  const auto start = Clock::now();
  if (opt.out.empty()) throw Error(ErrorCode::InvalidArgument, "an output path is required");
  opt.config.validate();

  std::vector<std::string> inputs;
  if (opt.config.mode == FitMode::Multitask && fs::is_directory(opt.input)) {
    inputs = csv_files(opt.input);
  } else {
    inputs.push_back(opt.input);
  }
  std::string bytes;
  std::vector<Dataset> data;
  for (const auto& path : inputs) {
    const std::string text = read_file(path);
    bytes += text;
    data.push_back(parse_csv(text, path));
  }
  const std::vector<std::string>& features = data.front().features;
  for (const Dataset& x : data) {
    if (x.features != features) {
      throw Error(ErrorCode::DimensionMismatch, "multitask inputs must share the same feature columns");
    }
  }

  FitResult result;
  try {
    switch (opt.config.mode) {
      case FitMode::Direct: result = fit_direct(data.front(), opt.config); break;
      case FitMode::Cv: result = fit_cv(data.front(), opt.config); break;
      case FitMode::Multitask: result = fit_multitask(data, opt.config); break;
      case FitMode::Missing:
        if (!data.front().has_missing()) log << "warning: missing mode on data without missing entries\n";
        result = fit_missing(data.front(), opt.config);
        break;
    }
  } catch (const Error& e) {
    rethrow_named(e, features);
  }

  write_json(opt.out, fit_to_json(result, features));
  Manifest m;
  m.command = "fit";
  m.config = config_to_json(result.config);
  m.seed = opt.config.seed;
  m.input_fingerprint = fingerprint(bytes);
  m.duration_seconds = seconds_since(start);
  write_json(opt.out + ".manifest.json", manifest_to_json(m));

  log << "mode " << to_string(result.config.mode) << ": " << result.loss_history.size() << " epochs, final loss "
      << fmt3(result.loss_history.back());
  if (result.best_epoch) log << ", best epoch " << *result.best_epoch;
  log << "\nwrote " << opt.out << "\n";
}

void cmd_evaluate(const EvaluateOptions& opt, std::ostream& log) {
  const auto start = Clock::now();
  const std::string pred_text = read_file(opt.precision);
  const std::string truth_text = read_file(opt.truth);
  const PrecisionDocument doc = precision_from_json(parse_json(pred_text, opt.precision));
  const std::vector<GroundTruth> truths = truth_from_json(parse_json(truth_text, opt.truth));
  if (doc.precisions.size() != truths.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(doc.precisions.size()) + " estimates but " +
                                                  std::to_string(truths.size()) + " ground-truth graphs");
  }
  std::vector<MetricReport> reports;
  for (std::size_t k = 0; k < truths.size(); ++k) {
    reports.push_back(aupr_auc(doc.precisions[k], truths[k]));
    if (truths.size() > 1) {
      log << "graph " << k + 1 << ": aupr " << fmt3(reports.back().aupr) << " auc " << fmt3(reports.back().auc) << "\n";
    }
  }
  const MetricSummary s = summarize(reports);
  if (reports.size() == 1) {
    log << "aupr " << fmt3(s.mean_aupr) << " auc " << fmt3(s.mean_auc) << "\n";
  } else {
    log << "mean aupr " << fmt3(s.mean_aupr) << "±" << fmt3(s.std_aupr) << " auc " << fmt3(s.mean_auc) << "±"
        << fmt3(s.std_auc) << "\n";
  }
  if (!opt.out.empty()) {
    write_json(opt.out, metrics_to_json(reports));
    Manifest m;
    m.command = "evaluate";
    m.config = Json{{"precision", opt.precision}, {"truth", opt.truth}};
    m.input_fingerprint = fingerprint(pred_text + truth_text);
    m.duration_seconds = seconds_since(start);
    write_json(opt.out + ".manifest.json", manifest_to_json(m));
  }
}

void cmd_compare(const CompareOptions& opt, std::ostream& log) {
  const auto start = Clock::now();
  const std::string text = read_file(opt.scenario);
  const Scenario s = Scenario::parse(text, opt.scenario);
  const std::size_t threads = opt.threads.value_or(configured_threads());
  const BenchmarkResult r = run_benchmark(s, threads);
  log << s.name << " (" << s.graphs << " graphs, D=" << s.d << ")\n" << format_tables(r);
  if (!opt.out_dir.empty()) {
    ensure_dir(opt.out_dir);
    const fs::path out(opt.out_dir);
    write_file((out / "summary.csv").string(), summary_csv(r));
    write_file((out / "per_graph.csv").string(), per_graph_csv(r));
    write_file((out / "tables.txt").string(), format_tables(r));
    Manifest m;
    m.command = "compare";
    m.config = Json{{"scenario", opt.scenario}, {"threads", threads}};
    m.seed = s.seed;
    m.input_fingerprint = fingerprint(text);
    m.duration_seconds = seconds_since(start);
    write_json((out / "manifest.json").string(), manifest_to_json(m));
  }
}

std::string precision_to_dot(const Matrix& theta, const std::vector<std::string>& features, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::InvalidThreshold, "threshold must be a finite value >= 0");
  }
  const std::size_t d = theta.rows();
  if (!theta.is_square() || features.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "precision and feature names disagree in size");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(theta(i, i) > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite, "diagonal entry " + std::to_string(i) + " is not positive");
    }
  }
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out + "\"";
  };
  std::string dot = "graph precision {\n  node [shape=ellipse];\n";
  for (const auto& f : features) dot += "  " + quote(f) + ";\n";
  char buf[128];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double pc = -theta(i, j) / std::sqrt(theta(i, i) * theta(j, j));
      if (!(std::abs(pc) > threshold)) continue;
      std::snprintf(buf, sizeof buf, " [color=%s, penwidth=%.4f, weight=%.6f];\n", pc > 0 ? "green" : "red",
                    5.0 * std::abs(pc), std::abs(pc));
      dot += "  " + quote(features[i]) + " -- " + quote(features[j]) + buf;
    }
  }
  return dot + "}\n";
}

void cmd_export_graph(const ExportOptions& opt, std::ostream& log) {
  const auto start = Clock::now();
  if (opt.out.empty()) throw Error(ErrorCode::InvalidArgument, "an output path is required");
  const std::string text = read_file(opt.precision);
  const PrecisionDocument doc = precision_from_json(parse_json(text, opt.precision));
  if (opt.index >= doc.precisions.size()) {
    throw Error(ErrorCode::InvalidArgument, "index " + std::to_string(opt.index) + " out of range (" +
                                                std::to_string(doc.precisions.size()) + " precision blocks)");
  }
  const std::string dot = precision_to_dot(doc.precisions[opt.index], doc.features, opt.threshold);
  write_file(opt.out, dot);
  Manifest m;
  m.command = "export-graph";
  m.config = Json{{"precision", opt.precision}, {"threshold", opt.threshold}, {"index", opt.index}};
  m.input_fingerprint = fingerprint(text);
  m.duration_seconds = seconds_since(start);
  write_json(opt.out + ".manifest.json", manifest_to_json(m));
  std::size_t edges = 0;
  for (std::size_t pos = dot.find("\" -- \""); pos != std::string::npos; pos = dot.find("\" -- \"", pos + 1)) ++edges;
  log << "wrote " << opt.out << " (" << edges << " edges)\n";
}

}  // namespace uglad
