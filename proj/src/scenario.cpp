#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "uglad/bench.hpp"
#include "uglad/csv.hpp"
#include "uglad/errors.hpp"
#include "uglad/fit.hpp"
#include "uglad/glasso.hpp"
#include "uglad/json_io.hpp"
#include "uglad/parallel.hpp"
#include "uglad/random.hpp"
#include "uglad/synthetic.hpp"

namespace uglad {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, where + ": invalid number '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::ParseError, where + ": expected true or false, got '" + text + "'");
}

bool is_multitask(const std::string& method) { return method == "uglad-multitask"; }

std::string cell_label(const std::string& method, const BenchColumn& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "M=%zu, dropout=%g", c.samples, c.dropout);
  return method + " (" + buf + ")";
}

struct GraphDraw {
  GroundTruth truth;
  Dataset data;
};

GraphDraw draw_graph(const Scenario& s, const BenchColumn& col, std::size_t g) {
  Rng rng(derive_seed(s.seed, Stream::Graph, g));
  double p = s.p_min;
  if (s.p_max > s.p_min) p = std::uniform_real_distribution<double>(s.p_min, s.p_max)(rng);
  GraphDraw out;
  out.truth = generate_precision(s.d, p, rng());
  out.data = sample_mvn(out.truth, col.samples, derive_seed(derive_seed(s.seed, Stream::Samples, g), Stream::Samples, col.samples));
  if (col.dropout > 0.0) {
    const auto tag = static_cast<std::uint64_t>(std::llround(col.dropout * 1e6));
    out.data = inject_dropout(out.data, col.dropout, derive_seed(derive_seed(s.seed, Stream::Dropout, g), Stream::Dropout, tag));
  }
  return out;
}

FitConfig fit_config(const Scenario& s, FitMode mode, std::uint64_t seed) {
  FitConfig cfg;
  cfg.mode = mode;
  cfg.epochs = s.epochs;
  cfg.learning_rate = s.learning_rate;
  cfg.unroll.depth = s.depth;
  cfg.folds = s.folds;
  cfg.multitask_split = s.multitask_split;
  cfg.seed = seed;
  return cfg;
}

Dataset complete(const Dataset& x) { return x.has_missing() ? mean_impute(x) : x; }

// Scores one batch of `tasks` graphs with one method.
std::vector<MetricReport> run_cell(const Scenario& s, const std::string& method, const BenchColumn& col,
                                   std::size_t batch) {
  std::vector<GraphDraw> draws;
  for (std::size_t k = 0; k < s.tasks; ++k) draws.push_back(draw_graph(s, col, batch * s.tasks + k));

  std::vector<MetricReport> reports;
  if (is_multitask(method)) {
    std::vector<Dataset> tasks;
    for (const GraphDraw& g : draws) tasks.push_back(complete(g.data));
    const FitResult r = fit_multitask(tasks, fit_config(s, FitMode::Multitask, derive_seed(s.seed, Stream::Parameters, batch)));
    for (std::size_t k = 0; k < draws.size(); ++k) reports.push_back(aupr_auc(r.precisions[k], draws[k].truth));
    return reports;
  }
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const std::size_t g = batch * s.tasks + k;
    const std::uint64_t seed = derive_seed(s.seed, Stream::Parameters, g);
    const Dataset& x = draws[k].data;
    Matrix estimate;
    if (method == "uglad-direct") {
      estimate = fit_direct(complete(x), fit_config(s, FitMode::Direct, seed)).precision();
    } else if (method == "uglad-cv") {
      estimate = fit_cv(complete(x), fit_config(s, FitMode::Cv, seed)).precision();
    } else if (method == "uglad-missing") {
      estimate = fit_missing(x, fit_config(s, FitMode::Missing, seed)).precision();
    } else {  // baseline-cv, baseline-mean-impute
      const Dataset filled = complete(x);
      const std::vector<double> grid = default_rho_grid(covariance(filled), s.baseline_grid);
      estimate = baseline_cv(filled, grid, s.baseline_folds, seed);
    }
    reports.push_back(aupr_auc(estimate, draws[k].truth));
  }
  return reports;
}

std::string format_value(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f±%.3f", mean, sd);
  return buf;
}

std::string column_label(const Scenario& s, const BenchColumn& c) {
  char buf[64];
  if (s.dropout.size() > 1 && s.samples.size() == 1) {
    std::snprintf(buf, sizeof buf, "dropout=%g", c.dropout);
  } else if (s.dropout.size() > 1) {
    std::snprintf(buf, sizeof buf, "M=%zu,dropout=%g", c.samples, c.dropout);
  } else {
    std::snprintf(buf, sizeof buf, "M=%zu", c.samples);
  }
  return buf;
}

}  // namespace

const std::vector<std::string>& benchmark_methods() {
  static const std::vector<std::string> names{"uglad-direct", "uglad-cv",    "uglad-missing",
                                              "uglad-multitask", "baseline-cv", "baseline-mean-impute"};
  return names;
}

Scenario Scenario::parse(const std::string& text, const std::string& source) {
  Scenario s;
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen.count(key)) throw Error(ErrorCode::ParseError, where + ": duplicate key '" + key + "'");
    seen[key] = lineno;

    if (key == "name") {
      s.name = value;
    } else if (key == "methods") {
      s.methods = split_list(value);
    } else if (key == "d") {
      s.d = parse_number<std::size_t>(value, where);
    } else if (key == "p") {
      s.p_min = s.p_max = parse_number<double>(value, where);
    } else if (key == "p_min") {
      s.p_min = parse_number<double>(value, where);
    } else if (key == "p_max") {
      s.p_max = parse_number<double>(value, where);
    } else if (key == "samples") {
      s.samples.clear();
      for (const auto& v : split_list(value)) s.samples.push_back(parse_number<std::size_t>(v, where));
    } else if (key == "dropout") {
      s.dropout.clear();
      for (const auto& v : split_list(value)) s.dropout.push_back(parse_number<double>(v, where));
    } else if (key == "graphs") {
      s.graphs = parse_number<std::size_t>(value, where);
    } else if (key == "tasks") {
      s.tasks = parse_number<std::size_t>(value, where);
    } else if (key == "seed") {
      s.seed = parse_number<std::uint64_t>(value, where);
    } else if (key == "epochs") {
      s.epochs = parse_number<int>(value, where);
    } else if (key == "learning_rate") {
      s.learning_rate = parse_number<double>(value, where);
    } else if (key == "depth") {
      s.depth = parse_number<int>(value, where);
    } else if (key == "folds") {
      s.folds = parse_number<std::size_t>(value, where);
    } else if (key == "multitask_split") {
      s.multitask_split = parse_bool(value, where);
    } else if (key == "baseline_folds") {
      s.baseline_folds = parse_number<std::size_t>(value, where);
    } else if (key == "baseline_grid") {
      s.baseline_grid = parse_number<std::size_t>(value, where);
    } else {
      throw Error(ErrorCode::ParseError, where + ": unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

Scenario Scenario::load(const std::string& path) { return parse(read_file(path), path); }

void Scenario::validate() const {
  auto fail = [&](const std::string& what) { throw Error(ErrorCode::InvalidArgument, name + ": " + what); };
  if (methods.empty()) fail("no methods listed");
  for (const auto& m : methods) {
    const auto& known = benchmark_methods();
    if (std::find(known.begin(), known.end(), m) == known.end()) fail("unknown method '" + m + "'");
  }
  if (d < 2) fail("d must be >= 2");
  if (!(p_min >= 0.0 && p_max <= 1.0 && p_min <= p_max)) fail("edge probabilities must satisfy 0 <= p_min <= p_max <= 1");
  if (samples.empty() || dropout.empty()) fail("samples and dropout lists must be non-empty");
  for (auto m : samples)
    if (m < 4) fail("every sample count must be >= 4");
  for (double f : dropout)
    if (!(f >= 0.0 && f < 1.0)) fail("dropout fractions must lie in [0, 1)");
  if (graphs == 0 || tasks == 0) fail("graphs and tasks must be positive");
  if (graphs % tasks != 0) fail("graphs must be a multiple of tasks");
  if (epochs < 1 || depth < 1) fail("epochs and depth must be positive");
  if (folds < 2 || baseline_folds < 2) fail("fold counts must be >= 2");
  if (baseline_grid < 1) fail("baseline_grid must be positive");
  fit_config(*this, FitMode::Direct, 0).validate();
}

std::vector<BenchColumn> benchmark_columns(const Scenario& s) {
  std::vector<BenchColumn> cols;
  for (std::size_t m : s.samples)
    for (double f : s.dropout) cols.push_back({m, f});
  return cols;
}

const CellResult& BenchmarkResult::cell(const std::string& method, std::size_t column) const {
  for (const CellResult& c : cells) {
    if (c.method == method && c.column.samples == columns.at(column).samples &&
        c.column.dropout == columns.at(column).dropout) {
      return c;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no results for " + method);
}

BenchmarkResult run_benchmark(const Scenario& s, std::size_t threads,
                              const std::function<void(const std::string&)>& progress) {
  s.validate();
  BenchmarkResult out;
  out.scenario = s;
  out.columns = benchmark_columns(s);
  const std::size_t batches = s.graphs / s.tasks;
  for (const auto& m : s.methods)
    for (const auto& c : out.columns) out.cells.push_back({m, c, std::vector<MetricReport>(s.graphs)});

  const std::size_t n = out.cells.size() * batches;
  parallel_for(n, threads, [&](std::size_t item) {
    CellResult& cell = out.cells[item / batches];
    const std::size_t batch = item % batches;
    std::vector<MetricReport> reports;
    try {
      reports = run_cell(s, cell.method, cell.column, batch);
    } catch (const Error& e) {
      throw Error(e.code(), cell_label(cell.method, cell.column) + ", batch " + std::to_string(batch) + ": " + e.what(),
                  e.feature());
    }
    std::copy(reports.begin(), reports.end(), cell.reports.begin() + static_cast<std::ptrdiff_t>(batch * s.tasks));
    if (progress) progress(cell_label(cell.method, cell.column) + " batch " + std::to_string(batch) + " done");
  });
  return out;
}

std::string summary_csv(const BenchmarkResult& r) {
  std::string out = "method,samples,dropout,metric,mean,std,n\n";
  char buf[256];
  for (const CellResult& c : r.cells) {
    const MetricSummary s = summarize(c.reports);
    for (int metric = 0; metric < 2; ++metric) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%g,%s,%.17g,%.17g,%zu\n", c.method.c_str(), c.column.samples,
                    c.column.dropout, metric == 0 ? "aupr" : "auc", metric == 0 ? s.mean_aupr : s.mean_auc,
                    metric == 0 ? s.std_aupr : s.std_auc, c.reports.size());
      out += buf;
    }
  }
  return out;
}

std::string per_graph_csv(const BenchmarkResult& r) {
  std::string out = "method,samples,dropout,graph,aupr,auc\n";
  char buf[256];
  for (const CellResult& c : r.cells) {
    for (std::size_t g = 0; g < c.reports.size(); ++g) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%g,%zu,%.17g,%.17g\n", c.method.c_str(), c.column.samples,
                    c.column.dropout, g, c.reports[g].aupr, c.reports[g].auc);
      out += buf;
    }
  }
  return out;
}

std::string format_tables(const BenchmarkResult& r) {
  std::size_t method_width = 6;
  for (const auto& m : r.scenario.methods) method_width = std::max(method_width, m.size());
  std::string out;
  for (int metric = 0; metric < 2; ++metric) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"Method"};
    for (const auto& c : r.columns) header.push_back(column_label(r.scenario, c));
    rows.push_back(header);
    for (const auto& m : r.scenario.methods) {
      std::vector<std::string> row{m};
      for (std::size_t c = 0; c < r.columns.size(); ++c) {
        const MetricSummary s = summarize(r.cell(m, c).reports);
        row.push_back(metric == 0 ? format_value(s.mean_aupr, s.std_aupr) : format_value(s.mean_auc, s.std_auc));
      }
      rows.push_back(row);
    }
    out += metric == 0 ? "AUPR\n" : "AUC\n";
    for (const auto& row : rows) {
      std::string line = row[0] + std::string(method_width + 2 - row[0].size(), ' ');
      for (std::size_t k = 1; k < row.size(); ++k) {
        std::string cell = row[k];
        // "±" is two bytes but one column wide.
        const std::size_t visible = cell.size() - (cell.find("±") != std::string::npos ? 1 : 0);
        line += cell + std::string(visible < 18 ? 18 - visible : 1, ' ');
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    }
    if (metric == 0) out += "\n";
  }
  return out;
}

}  // namespace uglad
