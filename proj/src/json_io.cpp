#include "uglad/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "uglad/csv.hpp"
#include "uglad/errors.hpp"

namespace uglad {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + ": missing field '" + key + "'");
  return j.at(key);
}

void expect_format(const Json& j, const char* format) {
  const Json& f = field(j, "format_version", "document");
  if (!f.is_string() || f.get<std::string>() != format) {
    bad(std::string("expected format_version '") + format + "'");
  }
}

Json mlp_to_json(const Mlp& net) {
  Json layers = Json::array();
  for (const DenseLayer& l : net.layers) {
    Json w = Json::array();
    for (std::size_t o = 0; o < l.outputs; ++o) {
      Json row = Json::array();
      for (std::size_t i = 0; i < l.inputs; ++i) row.push_back(l.weights[o * l.inputs + i]);
      w.push_back(std::move(row));
    }
    layers.push_back(Json{{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", w}, {"bias", l.bias}});
  }
  return Json{{"layers", layers}};
}

void mlp_from_json(const Json& j, Mlp& net, const std::string& name) {
  const Json& layers = field(j, "layers", name);
  if (!layers.is_array() || layers.size() != net.layers.size()) {
    bad(name + ": expected " + std::to_string(net.layers.size()) + " layers");
  }
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    DenseLayer& l = net.layers[k];
    const std::string where = name + " layer " + std::to_string(k);
    if (field(layers[k], "inputs", where) != l.inputs || field(layers[k], "outputs", where) != l.outputs) {
      bad(where + ": shape differs from the network architecture");
    }
    const Matrix w = matrix_from_json(field(layers[k], "weights", where), where + " weights");
    if (w.rows() != l.outputs || w.cols() != l.inputs) bad(where + ": weight shape mismatch");
    l.weights.assign(w.values().begin(), w.values().end());
    const Json& b = field(layers[k], "bias", where);
    if (!b.is_array() || b.size() != l.outputs) bad(where + ": bias length mismatch");
    for (std::size_t o = 0; o < l.outputs; ++o) {
      if (!b[o].is_number()) bad(where + ": bias entries must be numbers");
      l.bias[o] = b[o].get<double>();
    }
  }
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    bad(what + ": expected a non-empty array of rows");
  }
  const std::size_t cols = j[0].size();
  Matrix m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) bad(what + ": row " + std::to_string(i) + " has the wrong length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) bad(what + ": entry (" + std::to_string(i) + "," + std::to_string(c) + ") is not a number");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

Json params_to_json(const GladParams& p) {
  return Json{{"format_version", kParamsFormat},
              {"rho", mlp_to_json(p.rho)},
              {"lambda", mlp_to_json(p.lambda)},
              {"theta_offset", p.theta_offset}};
}

GladParams params_from_json(const Json& j) {
  expect_format(j, kParamsFormat);
  GladParams p = GladParams::zeros();
  mlp_from_json(field(j, "rho", "params"), p.rho, "rho");
  mlp_from_json(field(j, "lambda", "params"), p.lambda, "lambda");
  const Json& t = field(j, "theta_offset", "params");
  if (!t.is_number() || !(t.get<double>() > 0.0)) bad("params: theta_offset must be a positive number");
  p.theta_offset = t.get<double>();
  return p;
}

Json config_to_json(const FitConfig& cfg) {
  Json j{{"mode", to_string(cfg.mode)},
         {"epochs", cfg.epochs},
         {"learning_rate", cfg.learning_rate},
         {"learning_rate_override", cfg.allow_learning_rate_override},
         {"depth", cfg.unroll.depth},
         {"lambda_init", cfg.unroll.lambda_init},
         {"early_stop_tol", cfg.early_stop_tol},
         {"early_stop_window", cfg.early_stop_window},
         {"seed", cfg.seed}};
  if (cfg.mode == FitMode::Cv || (cfg.mode == FitMode::Multitask && cfg.multitask_split)) {
    j["cv_holdout"] = cfg.cv_holdout;
  }
  if (cfg.mode == FitMode::Missing) j["folds"] = cfg.folds;
  if (cfg.mode == FitMode::Multitask) j["multitask_split"] = cfg.multitask_split;
  return j;
}

Json fit_to_json(const FitResult& r, const std::vector<std::string>& features) {
  Json j{{"format_version", kFitFormat}, {"mode", to_string(r.config.mode)}, {"features", features}};
  if (r.config.mode == FitMode::Multitask) {
    Json list = Json::array();
    for (const Matrix& m : r.precisions) list.push_back(matrix_to_json(m));
    j["precisions"] = std::move(list);
  } else {
    j["precision"] = matrix_to_json(r.precision());
  }
  if (r.best_epoch) j["best_epoch"] = *r.best_epoch;
  if (r.consensus) {
    j["consensus"] = true;
    j["folds"] = r.config.folds;
  }
  j["loss_history"] = r.loss_history;
  if (!r.validation_history.empty()) j["validation_history"] = r.validation_history;
  j["seed"] = r.config.seed;
  j["config"] = config_to_json(r.config);
  j["params"] = params_to_json(r.params);
  return j;
}

PrecisionDocument precision_from_json(const Json& j) {
  expect_format(j, kFitFormat);
  PrecisionDocument doc;
  if (j.contains("mode") && j["mode"].is_string()) doc.mode = j["mode"].get<std::string>();
  if (j.contains("precisions")) {
    const Json& list = j["precisions"];
    if (!list.is_array() || list.empty()) bad("precisions: expected a non-empty list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      doc.precisions.push_back(matrix_from_json(list[k], "precisions[" + std::to_string(k) + "]"));
    }
  } else {
    doc.precisions.push_back(matrix_from_json(field(j, "precision", "fit document"), "precision"));
  }
  const std::size_t d = doc.precisions.front().rows();
  for (const Matrix& m : doc.precisions) {
    if (!m.is_square() || m.rows() != d) bad("precision matrices must be square and share one dimension");
  }
  if (j.contains("features")) doc.features = j["features"].get<std::vector<std::string>>();
  if (doc.features.empty()) doc.features = default_feature_names(d);
  if (doc.features.size() != d) bad("features: expected " + std::to_string(d) + " names");
  return doc;
}

Json truth_to_json(std::span<const GroundTruth> truths, const std::vector<std::string>& features) {
  auto one = [](const GroundTruth& t) {
    return Json{{"precision", matrix_to_json(t.precision)}, {"adjacency", matrix_to_json(t.adjacency)}};
  };
  Json j{{"format_version", kTruthFormat}, {"features", features}};
  if (truths.size() == 1) {
    const Json single = one(truths.front());
    for (auto& [k, v] : single.items()) j[k] = v;
  } else {
    Json list = Json::array();
    for (const GroundTruth& t : truths) list.push_back(one(t));
    j["tasks"] = std::move(list);
  }
  return j;
}

std::vector<GroundTruth> truth_from_json(const Json& j) {
  expect_format(j, kTruthFormat);
  auto one = [](const Json& t, const std::string& where) {
    GroundTruth g;
    g.precision = matrix_from_json(field(t, "precision", where), where + " precision");
    g.adjacency = t.contains("adjacency") ? matrix_from_json(t["adjacency"], where + " adjacency")
                                          : support(g.precision);
    if (!g.precision.is_square() || !g.adjacency.same_shape(g.precision)) {
      bad(where + ": precision and adjacency must be square and equally sized");
    }
    return g;
  };
  std::vector<GroundTruth> out;
  if (j.contains("tasks")) {
    const Json& list = j["tasks"];
    if (!list.is_array() || list.empty()) bad("truth tasks: expected a non-empty list");
    for (std::size_t k = 0; k < list.size(); ++k) out.push_back(one(list[k], "tasks[" + std::to_string(k) + "]"));
  } else {
    out.push_back(one(j, "truth"));
  }
  return out;
}

MetricSummary summarize(std::span<const MetricReport> reports) {
  MetricSummary s;
  if (reports.empty()) return s;
  const double n = static_cast<double>(reports.size());
  for (const MetricReport& r : reports) {
    s.mean_aupr += r.aupr / n;
    s.mean_auc += r.auc / n;
  }
  for (const MetricReport& r : reports) {
    s.std_aupr += (r.aupr - s.mean_aupr) * (r.aupr - s.mean_aupr) / n;
    s.std_auc += (r.auc - s.mean_auc) * (r.auc - s.mean_auc) / n;
  }
  s.std_aupr = std::sqrt(s.std_aupr);
  s.std_auc = std::sqrt(s.std_auc);
  return s;
}

Json metrics_to_json(std::span<const MetricReport> reports) {
  Json list = Json::array();
  for (const MetricReport& r : reports) {
    list.push_back(Json{{"aupr", r.aupr}, {"auc", r.auc}, {"n_positive", r.n_positive}, {"n_negative", r.n_negative}});
  }
  const MetricSummary s = summarize(reports);
  return Json{{"format_version", kMetricsFormat},
              {"reports", list},
              {"mean", {{"aupr", s.mean_aupr}, {"auc", s.mean_auc}}},
              {"std", {{"aupr", s.std_aupr}, {"auc", s.std_auc}}}};
}

Json manifest_to_json(const Manifest& m) {
  return Json{{"format_version", kManifestFormat},
              {"command", m.command},
              {"config", m.config},
              {"seed", m.seed},
              {"input_fingerprint", m.input_fingerprint},
              {"tool_version", kToolVersion},
              {"duration_seconds", m.duration_seconds}};
}

std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad(source + ": " + e.what());
  }
}

Json read_json(const std::string& path) { return parse_json(read_file(path), path); }

void write_json(const std::string& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace uglad
