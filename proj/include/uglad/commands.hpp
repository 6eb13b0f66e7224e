#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "uglad/errors.hpp"
#include "uglad/fit.hpp"

namespace uglad {

/// Process exit status for a library error: 2 argument, 3 data, 4 numerical.
int exit_code(ErrorCode code);

inline constexpr double kDefaultEdgeThreshold = 1e-3;

struct SimulateOptions {
  std::size_t d = 25;
  double p = 0.1;
  std::size_t samples = 50;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  std::size_t tasks = 1;
  std::string out_dir;
};
/// Writes data.csv (or data/task_XX.csv per task), truth.json and
/// manifest.json into out_dir.
void cmd_simulate(const SimulateOptions& opt, std::ostream& log);

struct FitOptions {
  std::string input;  // CSV file, or a directory of CSVs in multitask mode
  FitConfig config;
  std::string out;    // precision JSON; the manifest goes to <out>.manifest.json
};
void cmd_fit(const FitOptions& opt, std::ostream& log);

struct EvaluateOptions {
  std::string precision;
  std::string truth;
  std::string out;  // optional metrics JSON
};
void cmd_evaluate(const EvaluateOptions& opt, std::ostream& log);

struct CompareOptions {
  std::string scenario;
  std::string out_dir;  // optional: summary.csv, per_graph.csv, manifest.json
  std::optional<std::size_t> threads;
};
void cmd_compare(const CompareOptions& opt, std::ostream& log);

struct ExportOptions {
  std::string precision;
  double threshold = kDefaultEdgeThreshold;
  std::size_t index = 0;  // which block of a multitask document
  std::string out;
};
void cmd_export_graph(const ExportOptions& opt, std::ostream& log);

/// DOT graph over |partial correlation| > threshold: green for positive,
/// red for negative, pen width proportional to magnitude.
std::string precision_to_dot(const Matrix& theta, const std::vector<std::string>& features, double threshold);

}  // namespace uglad
