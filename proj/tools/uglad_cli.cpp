#include <iostream>

#include <CLI11.hpp>

#include "uglad/commands.hpp"
#include "uglad/json_io.hpp"

int main(int argc, char** argv) {
  using namespace uglad;

  CLI::App app{"Sparse precision-matrix recovery with an unsupervised unrolled network"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a random sparse graph and Gaussian samples");
  simulate->add_option("-d,--features", sim.d, "Number of features")->check(CLI::Range(2, 100000));
  simulate->add_option("-p,--edge-prob", sim.p, "Edge probability")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("-m,--samples", sim.samples, "Number of samples")->check(CLI::PositiveNumber);
  simulate->add_option("--dropout", sim.dropout, "Fraction of entries to mark missing, in [0, 1)");
  simulate->add_option("--tasks", sim.tasks, "Number of independent graphs")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("-o,--out", sim.out_dir, "Output directory")->required();

  FitOptions fo;
  std::string mode = "cv";
  auto* fit = app.add_subcommand("fit", "Estimate a precision matrix from a CSV file");
  fit->add_option("input", fo.input, "CSV file (or directory of CSV files for multitask)")->required();
  fit->add_option("--mode", mode, "direct, cv, multitask or missing")
      ->check(CLI::IsMember({"direct", "cv", "multitask", "missing"}));
  fit->add_option("--epochs", fo.config.epochs, "Training epochs")->check(CLI::PositiveNumber);
  fit->add_option("--lr", fo.config.learning_rate, "Adam learning rate, normally in [0.001, 0.005]");
  fit->add_flag("--allow-lr", fo.config.allow_learning_rate_override, "Accept a learning rate outside the usual range");
  fit->add_option("--depth", fo.config.unroll.depth, "Unrolled iterations")->check(CLI::PositiveNumber);
  fit->add_option("--holdout", fo.config.cv_holdout, "Validation fraction for cv mode");
  fit->add_option("--folds", fo.config.folds, "Batches for missing mode")->check(CLI::Range(2, 1000));
  fit->add_flag("--split", fo.config.multitask_split, "Multitask: score each task on a held-out split");
  fit->add_option("--early-stop", fo.config.early_stop_window, "Early-stop window in epochs (0 disables)");
  fit->add_option("--seed", fo.config.seed, "Random seed");
  fit->add_option("-o,--out", fo.out, "Output precision JSON")->required();

  EvaluateOptions eo;
  auto* evaluate = app.add_subcommand("evaluate", "Score an estimate against ground truth");
  evaluate->add_option("precision", eo.precision, "Precision JSON from fit")->required();
  evaluate->add_option("truth", eo.truth, "Ground-truth JSON from simulate")->required();
  evaluate->add_option("-o,--out", eo.out, "Metrics JSON");

  CompareOptions co;
  auto* compare = app.add_subcommand("compare", "Run a benchmark scenario");
  compare->add_option("scenario", co.scenario, "Scenario file")->required();
  compare->add_option("-o,--out", co.out_dir, "Directory for result tables");
  compare->add_option("--threads", co.threads, "Worker threads (default: $UGLAD_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  ExportOptions xo;
  auto* export_graph = app.add_subcommand("export-graph", "Write the estimated graph in DOT format");
  export_graph->add_option("precision", xo.precision, "Precision JSON from fit")->required();
  export_graph->add_option("--threshold", xo.threshold, "Minimum |partial correlation| for an edge");
  export_graph->add_option("--index", xo.index, "Block of a multitask result (0-based)");
  export_graph->add_option("-o,--out", xo.out, "Output DOT file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) cmd_simulate(sim, std::cout);
    if (*fit) {
      fo.config.mode = parse_fit_mode(mode);
      cmd_fit(fo, std::cout);
    }
    if (*evaluate) cmd_evaluate(eo, std::cout);
    if (*compare) cmd_compare(co, std::cout);
    if (*export_graph) cmd_export_graph(xo, std::cout);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
