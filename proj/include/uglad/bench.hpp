#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uglad/metrics.hpp"

namespace uglad {

/// Benchmark scenario read from a key = value text file. Lists are comma
/// separated; '#' starts a comment.
struct Scenario {
  std::string name = "scenario";
  std::vector<std::string> methods;
  std::size_t d = 25;
  double p_min = 0.1;  // edge probability, drawn uniformly per graph from [p_min, p_max]
  double p_max = 0.1;
  std::vector<std::size_t> samples{25};
  std::vector<double> dropout{0.0};
  std::size_t graphs = 20;
  std::size_t tasks = 1;  // graphs per multitask batch
  std::uint64_t seed = 0;
  int epochs = 250;
  double learning_rate = 0.002;
  int depth = 30;
  std::size_t folds = 3;
  bool multitask_split = false;
  std::size_t baseline_folds = 3;
  std::size_t baseline_grid = 8;

  static Scenario parse(const std::string& text, const std::string& source = "<scenario>");
  static Scenario load(const std::string& path);
  void validate() const;
};

/// Recognised method names.
const std::vector<std::string>& benchmark_methods();

struct BenchColumn {
  std::size_t samples = 0;
  double dropout = 0.0;
};

struct CellResult {
  std::string method;
  BenchColumn column;
  std::vector<MetricReport> reports;  // one per graph, in graph order
};

struct BenchmarkResult {
  Scenario scenario;
  std::vector<BenchColumn> columns;
  std::vector<CellResult> cells;  // method-major, then column

  const CellResult& cell(const std::string& method, std::size_t column) const;
};

std::vector<BenchColumn> benchmark_columns(const Scenario& s);

/// Runs every (method, column, graph batch) cell on up to `threads` workers.
/// Results do not depend on the thread count.
BenchmarkResult run_benchmark(const Scenario& s, std::size_t threads,
                              const std::function<void(const std::string&)>& progress = {});

/// method,samples,dropout,metric,mean,std,n
std::string summary_csv(const BenchmarkResult& r);
/// method,samples,dropout,graph,aupr,auc
std::string per_graph_csv(const BenchmarkResult& r);
/// One table per metric: methods as rows, columns as in the scenario.
std::string format_tables(const BenchmarkResult& r);

}  // namespace uglad
