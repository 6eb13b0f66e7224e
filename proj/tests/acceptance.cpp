// Acceptance runner: prints one PASS/FAIL line per criterion.
// Usage: acceptance <properties|table1|table3|table4>...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uglad/bench.hpp"
#include "uglad/errors.hpp"
#include "uglad/fit.hpp"
#include "uglad/glad.hpp"
#include "uglad/glasso.hpp"
#include "uglad/json_io.hpp"
#include "uglad/linalg.hpp"
#include "uglad/metrics.hpp"
#include "uglad/parallel.hpp"
#include "uglad/synthetic.hpp"

using namespace uglad;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s  (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

GladParams random_params(oracle::Rng& rng, double scale) {
  GladParams p = GladParams::zeros();
  std::vector<double> flat = p.flatten();
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : flat) v = u(rng);
  flat.back() = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  p.assign(flat);
  return p;
}

// --- property suite ------------------------------------------------------------

void spd_every_step() {
  oracle::Rng rng(101);
  std::size_t failures_seen = 0, iterates = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 3 + static_cast<std::size_t>(trial) % 23;
    const double p = std::uniform_real_distribution<double>(0.05, 0.3)(rng);
    const GroundTruth g = generate_precision(d, p, rng());
    const Dataset x = sample_mvn(g, 5 + static_cast<std::size_t>(trial) % (2 * d), rng());
    FitConfig cfg;
    cfg.mode = FitMode::Direct;
    cfg.epochs = 3;
    cfg.seed = rng();
    GladParams params;
    try {
      params = fit_direct(x, cfg).params;
    } catch (const Error&) {
      ++failures_seen;  // a failed fit counts as a Cholesky failure
      continue;
    }
    const GladTrace trace = glad_forward(covariance(x), params, cfg.unroll, true);
    for (const GladState& st : trace.trajectory) {
      ++iterates;
      if (!is_positive_definite(st.theta)) ++failures_seen;
    }
  }
  report(failures_seen == 0, "SPD at every unrolled step over 100 fits (d 3..25, L 30)",
         std::to_string(failures_seen) + " Cholesky failures in " + std::to_string(iterates) + " iterates");
}

void permutation_equivariance() {
  oracle::Rng rng(102);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + static_cast<std::size_t>(trial) % 20;
    const Matrix s = oracle::random_covariance(d, 2 * d, rng);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const GladParams p = random_params(rng, 0.5);
    const UnrollConfig cfg;
    const Matrix a = permute_symmetric(glad_forward(s, p, cfg).final_state.theta, perm);
    const Matrix b = glad_forward(permute_symmetric(s, perm), p, cfg).final_state.theta;
    worst = std::max(worst, max_abs_diff(a, b));
  }
  report(worst < 1e-9, "forward pass permutation equivariance on 50 pairs", fmt("max |diff| %.3g < 1e-9", worst));
}

void gradient_check() {
  oracle::Rng rng(103);
  UnrollConfig cfg;
  cfg.depth = 4;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = oracle::random_covariance(5, 12, rng);
    const GladParams p = random_params(rng, 0.5);
    ad::Tape tape;
    const GladNetwork net(tape, p);
    const RecordedState out = record_glad_forward(net, tape.constant(s), cfg);
    tape.backward(record_uglad_loss(tape.constant(s), out.theta));
    const auto f = [&](std::span<const double> flat) {
      GladParams q = p;
      q.assign(flat);
      return uglad_loss(s, glad_forward(s, q, cfg).final_state.theta);
    };
    worst = std::max(worst, ad::finite_difference_check(f, p.flatten(), net.gradient(), 1e-6));
  }
  report(worst < 1e-4, "tape gradient vs central differences (L 4, d 5, 20 draws)",
         fmt("max relative error %.3g < 1e-4", worst));
}

void fixed_point() {
  oracle::Rng rng(104);
  UnrollConfig cfg;
  cfg.depth = 200;
  cfg.pinned_rho = 0.0;
  cfg.pinned_lambda = 1.0;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = oracle::random_spd(10, 0.5, 2.0, rng);
    const Matrix theta = glad_forward(s, GladParams::initialize(rng()), cfg).final_state.theta;
    const Matrix inv = oracle::gauss_jordan_inverse(s);
    worst = std::max(worst, oracle::frob_diff(theta, inv) / oracle::frob(inv));
  }
  report(worst < 1e-3, "zero thresholds, unit penalty, L 200 recovers the inverse (20 draws)",
         fmt("max relative error %.3g < 1e-3", worst));
}

void sqrt_square_back() {
  oracle::Rng rng(105);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial) % 24;
    const double lo = std::pow(10.0, std::uniform_real_distribution<double>(-4.0, 0.0)(rng));
    const Matrix a = oracle::random_spd(d, lo, 1.0, rng);
    const Matrix b = matrix_sqrt_spd(a);
    worst = std::max(worst, oracle::frob_diff(oracle::naive_matmul(b, b), a) / oracle::frob(a));
  }
  report(worst < 1e-7, "matrix square root squares back (100 draws, condition <= 1e4)",
         fmt("max relative residual %.3g < 1e-7", worst));
}

void metrics_oracle() {
  oracle::Rng rng(106);
  int mismatches = 0;
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 3 + static_cast<std::size_t>(trial) % 8;
    Matrix adj(d, d), pred(d, d);
    std::bernoulli_distribution edge(std::uniform_real_distribution<double>(0.1, 0.9)(rng));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) {
        adj(i, j) = adj(j, i) = edge(rng) ? 1.0 : 0.0;
        pred(i, j) = pred(j, i) = trial % 2 ? 0.1 * level(rng) : std::normal_distribution<double>()(rng);
      }
    adj(0, 1) = adj(1, 0) = 1.0;
    adj(0, 2) = adj(2, 0) = 0.0;
    const MetricReport r = aupr_auc(pred, adj);
    const oracle::Scores o = oracle::exhaustive_metrics(pred, adj);
    if (std::abs(r.auc - o.auc) > 1e-12 || std::abs(r.aupr - o.aupr) > 1e-12) ++mismatches;
  }
  report(mismatches == 0, "edge metrics equal the exhaustive oracle (500 trials, d <= 10)",
         std::to_string(mismatches) + " mismatches");
}

// Majority of signs beyond the vote threshold, magnitude min |v|, zero on ties.
double consensus_oracle(const std::vector<double>& v) {
  int pos = 0, neg = 0;
  double mag = INFINITY;
  for (double x : v) {
    pos += x > kVoteThreshold;
    neg += x < -kVoteThreshold;
    mag = std::min(mag, std::abs(x));
  }
  if (pos == neg) return 0.0;
  return pos > neg ? mag : -mag;
}

void consensus_rule() {
  oracle::Rng rng(107);
  int bad = 0, ties = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<Matrix> ms;
    std::vector<double> vals;
    for (int i = 0; i < k; ++i) {
      const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
      const double v = kind == 0 ? 0.0 : (kind == 1 ? 1e-9 : 1.0) * std::normal_distribution<double>()(rng);
      vals.push_back(v);
      ms.push_back(Matrix{{v}});
    }
    const double got = consensus_combine(ms).item();
    const double want = consensus_oracle(vals);
    if (want == 0.0 && k % 2 == 0) ++ties;
    double lo = INFINITY;
    for (double v : vals) lo = std::min(lo, std::abs(v));
    if (got != want || std::abs(got) > lo) ++bad;
  }
  report(bad == 0 && ties > 0, "consensus sign rule and magnitude bound (1000 tuples)",
         std::to_string(bad) + " violations, " + std::to_string(ties) + " even-K ties");
}

void admm_oracle() {
  oracle::Rng rng(108);
  double worst_kkt = 0, worst_obj = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix s = oracle::random_covariance(5, 6 + static_cast<std::size_t>(trial) * 3, rng);
    const double rho = std::uniform_real_distribution<double>(0.02, 0.3)(rng);
    const GlassoResult r = admm_glasso_detailed(s, rho, {});
    const Matrix ref = oracle::glasso_proximal_gradient(s, rho);
    worst_kkt = std::max(worst_kkt, glasso_kkt_residual(s, r.precision, rho));
    worst_obj = std::max(worst_obj, std::abs(oracle::glasso_objective(s, r.precision, rho) -
                                             oracle::glasso_objective(s, ref, rho)));
  }
  report(worst_kkt < 1e-6 && worst_obj < 1e-6, "ADMM optimality and objective vs slow reference (10 instances, d 5)",
         fmt("KKT %.3g < 1e-6, objective gap %.3g < 1e-6", worst_kkt, worst_obj));
}

void properties() {
  const auto t0 = Clock::now();
  spd_every_step();
  permutation_equivariance();
  gradient_check();
  fixed_point();
  sqrt_square_back();
  metrics_oracle();
  consensus_rule();
  admm_oracle();
  const double secs = seconds_since(t0);
  report(secs < 300, "property suite runtime", fmt("%.0f s < 300 s", secs));
}

// --- table suites --------------------------------------------------------------

BenchmarkResult run_scenario(const std::string& file, double limit_seconds) {
  const Scenario s = Scenario::load(std::string(UGLAD_SCENARIO_DIR) + "/" + file);
  s.validate();
  const std::size_t threads = configured_threads();
  const auto t0 = Clock::now();
  BenchmarkResult r = run_benchmark(s, threads);
  const double secs = seconds_since(t0);
  std::cout << format_tables(r) << std::flush;
  report(secs < limit_seconds, s.name + " runtime",
         fmt("%.0f s < %.0f s", secs, limit_seconds) + " on " + std::to_string(threads) + " threads");
  return r;
}

MetricSummary stats(const BenchmarkResult& r, const std::string& method, std::size_t column) {
  return summarize(r.cell(method, column).reports);
}

void table1() {
  const BenchmarkResult r = run_scenario("table1.scn", 15 * 60);
  const MetricSummary u10 = stats(r, "uglad-cv", 0);
  const MetricSummary b10 = stats(r, "baseline-cv", 0);
  const MetricSummary u50 = stats(r, "uglad-cv", 2);
  report(within(u10.mean_auc, 0.518, 0.626), "M=10 unsupervised-cv mean AUC in [0.518, 0.626]",
         fmt("%.3f +- %.3f", u10.mean_auc, u10.std_auc));
  report(within(u10.mean_aupr, 0.101, 0.217), "M=10 unsupervised-cv mean AUPR in [0.101, 0.217]",
         fmt("%.3f +- %.3f", u10.mean_aupr, u10.std_aupr));
  report(within(b10.mean_auc, 0.49, 0.53), "M=10 baseline-cv mean AUC in [0.49, 0.53]",
         fmt("%.3f +- %.3f", b10.mean_auc, b10.std_auc));
  report(u10.mean_auc > b10.mean_auc, "M=10 unsupervised-cv mean AUC exceeds baseline",
         fmt("%.3f > %.3f", u10.mean_auc, b10.mean_auc));
  report(within(u50.mean_auc, 0.61, 0.70), "M=50 unsupervised-cv mean AUC in [0.61, 0.70]",
         fmt("%.3f +- %.3f", u50.mean_auc, u50.std_auc));
}

void table3() {
  const BenchmarkResult r = run_scenario("table3.scn", 20 * 60);
  const MetricSummary mt = stats(r, "uglad-multitask", 0);
  const MetricSummary base = stats(r, "baseline-cv", 0);
  report(mt.mean_aupr >= base.mean_aupr, "multitask mean AUPR >= per-task baseline mean AUPR",
         fmt("%.3f >= %.3f", mt.mean_aupr, base.mean_aupr));
  report(within(mt.mean_auc, 0.48, 0.67), "multitask mean AUC in [0.48, 0.67]",
         fmt("%.3f +- %.3f", mt.mean_auc, mt.std_auc));
}

void table4() {
  const BenchmarkResult r = run_scenario("table4.scn", 30 * 60);
  std::size_t c25 = 0, c75 = 0;
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    if (std::abs(r.columns[c].dropout - 0.25) < 1e-12) c25 = c;
    if (std::abs(r.columns[c].dropout - 0.75) < 1e-12) c75 = c;
  }
  const MetricSummary miss75 = stats(r, "uglad-missing", c75);
  const MetricSummary impute75 = stats(r, "uglad-cv", c75);
  const MetricSummary miss25 = stats(r, "uglad-missing", c25);
  report(miss75.mean_auc >= impute75.mean_auc, "dropout 0.75 missing-mode mean AUC >= mean-impute mean AUC",
         fmt("%.3f >= %.3f", miss75.mean_auc, impute75.mean_auc));
  report(within(miss75.mean_auc, 0.48, 0.65), "dropout 0.75 missing-mode mean AUC in [0.48, 0.65]",
         fmt("%.3f +- %.3f", miss75.mean_auc, miss75.std_auc));
  report(within(miss25.mean_aupr, 0.41, 0.81), "dropout 0.25 missing-mode mean AUPR in [0.41, 0.81]",
         fmt("%.3f +- %.3f", miss25.mean_aupr, miss25.std_aupr));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> suites(argv + 1, argv + argc);
  if (suites.empty()) suites = {"properties", "table1", "table3", "table4"};
  for (const std::string& s : suites) {
    std::printf("== %s\n", s.c_str());
    try {
      if (s == "properties") properties();
      else if (s == "table1") table1();
      else if (s == "table3") table3();
      else if (s == "table4") table4();
      else {
        std::fprintf(stderr, "unknown suite '%s'\n", s.c_str());
        return 2;
      }
    } catch (const std::exception& e) {
      report(false, s + " suite completed", e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
