#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uglad/fit.hpp"
#include "uglad/metrics.hpp"
#include "uglad/synthetic.hpp"

namespace uglad {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kParamsFormat = "uglad-params/1";
inline constexpr const char* kFitFormat = "uglad-fit/1";
inline constexpr const char* kTruthFormat = "uglad-truth/1";
inline constexpr const char* kMetricsFormat = "uglad-metrics/1";
inline constexpr const char* kManifestFormat = "uglad-manifest/1";

Json matrix_to_json(const Matrix& m);
/// Throws ParseError unless `j` is a non-empty rectangular array of numbers.
Matrix matrix_from_json(const Json& j, const std::string& what);

Json params_to_json(const GladParams& p);
GladParams params_from_json(const Json& j);

Json config_to_json(const FitConfig& cfg);

/// Precision document written by `fit`.
Json fit_to_json(const FitResult& r, const std::vector<std::string>& features);

struct PrecisionDocument {
  std::vector<std::string> features;
  std::vector<Matrix> precisions;
  std::string mode;
};
PrecisionDocument precision_from_json(const Json& j);

/// Ground truth: one graph, or several under "tasks".
Json truth_to_json(std::span<const GroundTruth> truths, const std::vector<std::string>& features);
std::vector<GroundTruth> truth_from_json(const Json& j);

struct MetricSummary {
  double mean_aupr = 0.0;
  double std_aupr = 0.0;
  double mean_auc = 0.0;
  double std_auc = 0.0;
};
/// Population mean and standard deviation over the reports.
MetricSummary summarize(std::span<const MetricReport> reports);
Json metrics_to_json(std::span<const MetricReport> reports);

struct Manifest {
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::string input_fingerprint;
  double duration_seconds = 0.0;
};
Json manifest_to_json(const Manifest& m);

/// FNV-1a 64-bit hash of the bytes, as 16 hex digits.
std::string fingerprint(std::string_view bytes);

Json parse_json(const std::string& text, const std::string& source);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

}  // namespace uglad
