// Command-line front end: runs experiment configs, checks the convergence
// bounds they request, and exposes a built-in property selftest.
//
// Exit codes: 0 all checks passed, 1 a bound or selftest check failed,
// 2 configuration or runtime error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uniag/uniag.hpp"

namespace {

using namespace uniag;

// 0.999 quantile of chi-square with 15 degrees of freedom, for the
// termination-index frequency check (N = 16 categories).
constexpr double kChiSq999Df15 = 37.69729821835383;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void print_cell(const CellResult& cell) {
  std::cout << "cell n=" << cell.horizon << " oracle_calls=" << cell.total_oracle_calls
            << "\n";
  for (const auto& b : cell.bound_reports) {
    std::cout << "  [" << (b.pass ? "pass" : "FAIL") << "] " << b.bound_id
              << " lhs=" << fmt(b.lhs) << " rhs=" << fmt(b.rhs)
              << " margin=" << fmt(b.margin) << " reps=" << b.replications << "\n";
  }
  for (const auto& t : cell.tails) {
    std::cout << "  [" << (t.pass ? "pass" : "FAIL") << "] markov lambda=" << fmt(t.lambda)
              << " freq=" << fmt(t.freq) << " limit=" << fmt(t.limit) << "\n";
  }
  for (const auto& [name, s] : cell.metrics) {
    std::cout << "  metric " << name << " mean=" << fmt(s.mean)
              << " stderr=" << fmt(s.stderr_val) << " min=" << fmt(s.min)
              << " max=" << fmt(s.max) << "\n";
  }
}

enum class RunKind { run, verify, sweep };

int run_config(const std::string& config_path, RunKind kind,
               const std::optional<std::uint64_t>& seed,
               const std::optional<std::string>& out,
               const std::optional<int>& reps, bool quiet) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.out_dir = *out;
  if (reps) {
    if (*reps < 1) throw std::invalid_argument("--reps must be >= 1");
    cfg.replications = *reps;
  }
  if (kind == RunKind::verify) {
    cfg.emit.trace = false;
    if (cfg.bounds.empty())
      throw std::invalid_argument("verify: config requests no bound checks");
  }
  if (kind == RunKind::sweep && !cfg.from_sweep_list)
    throw std::invalid_argument("sweep: config must list horizons in n_sweep");

  const ExperimentResult res = run_experiment(cfg);
  const std::vector<std::string> files = emit_artifacts(cfg, res);

  if (!quiet) {
    for (const auto& cell : res.cells) print_cell(cell);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    bool any_checks = false;
    for (const auto& cell : res.cells)
      any_checks = any_checks || !cell.bound_reports.empty() || !cell.tails.empty();
    if (any_checks)
      std::cout << (res.all_pass ? "all bounds hold" : "BOUND FAILURE") << "\n";
  }
  return res.all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// selftest: fast built-in property checks, one line per check.

struct SelftestState {
  int failures = 0;

  void check(const std::string& name, bool ok) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  }
};

bool selftest_gamma() {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 1000);
  const GammaTable gt = gamma_table(s, 1000);
  double telescoped = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double closed = 2.0 / (static_cast<double>(k) * (k + 1.0));
    if (std::abs(gt.at(k) - closed) > 1e-12 * closed) return false;
    if (gt.suffix_from(k) > 2.0 / k * (1.0 + 1e-12)) return false;
    telescoped += step_triple(s, k).alpha / gt.at(k);
    if (std::abs(telescoped - 1.0 / gt.at(k)) > 1e-12 / gt.at(k)) return false;
  }
  return true;
}

bool selftest_step_examples() {
  const StepSchedule a = make_schedule(Policy::det_nonconvex, 1.0, 8, 0.0, 0.0, 1.0);
  const StepTriple a1 = step_triple(a, 1), a3 = step_triple(a, 3);
  if (std::abs(a1.alpha - 1.0) > 1e-15 || std::abs(a1.beta - 0.5) > 1e-15 ||
      std::abs(a1.lambda - 0.625) > 1e-15)
    return false;
  if (std::abs(a3.alpha - 0.5) > 1e-15 || std::abs(a3.lambda - 0.5625) > 1e-15)
    return false;
  const StepSchedule b = make_schedule(Policy::det_convex, 1.0, 8);
  const StepTriple b4 = step_triple(b, 4);
  if (std::abs(b4.alpha - 0.4) > 1e-15 || std::abs(b4.lambda - 1.0) > 1e-15) return false;
  const StepSchedule c = make_schedule(Policy::sto_convex, 1.0, 16, 1.0, 1.0);
  if (std::abs(step_triple(c, 1).beta - 0.125) > 1e-15) return false;
  if (std::abs(step_triple(c, 16).lambda - 0.125) > 1e-15) return false;
  return true;
}

bool selftest_c_floor() {
  for (double lips : {1.0, 3.0}) {
    for (double lc : {0.0, 1.0}) {
      for (int n : {10, 1000}) {
        const StepSchedule s =
            make_schedule(Policy::det_nonconvex, lips, n, 0.0, 0.0, lc);
        const GammaTable gt = gamma_table(s, n);
        for (int k = 1; k <= n; ++k) {
          const double c = c_coeff(s, gt, k);
          if (c < 11.0 / 32.0 - 1e-12) return false;
          if (step_triple(s, k).lambda * c < 1.0 / (6.0 * lips) - 1e-12) return false;
        }
      }
    }
  }
  return true;
}

bool selftest_pmf() {
  const StepSchedule s3 = make_schedule(Policy::det_convex, 1.0, 3);
  const std::vector<double> p3 = termination_pmf(s3, 3, PmfMode::convex);
  if (std::abs(p3[0] - 0.1) > 1e-15 || std::abs(p3[1] - 0.3) > 1e-15 ||
      std::abs(p3[2] - 0.6) > 1e-15)
    return false;
  for (PmfMode mode : {PmfMode::nonconvex, PmfMode::convex}) {
    const StepSchedule s = make_schedule(
        mode == PmfMode::nonconvex ? Policy::det_nonconvex : Policy::det_convex, 2.0, 257);
    const std::vector<double> p = termination_pmf(s, 257, mode);
    double sum = 0.0;
    for (double v : p) {
      if (!(v > 0.0)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) return false;
  }
  return true;
}

bool selftest_prox() {
  Vector x2(2), y2(2);
  x2 << 1.0, 1.0;
  y2 << 2.0, 0.0;
  const Vector pz = prox_map(make_zero_term(), x2, y2, 0.5);
  if (pz[0] != 0.0 || pz[1] != 1.0) return false;

  const CompositeTerm box = make_box_term(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  Vector x1(1), y1(1);
  x1 << 0.5;
  y1 << 3.0;
  if (prox_map(box, x1, y1, 1.0)[0] != -1.0) return false;
  if (std::abs(gradient_mapping(box, x1, y1, 1.0).value[0] - 1.5) > 1e-15) return false;

  const CompositeTerm bl1 =
      make_box_l1_term(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), 1.0);
  Vector x0(1), ym(1);
  x0 << 0.0;
  ym << -0.2;
  if (prox_map(bl1, x0, ym, 1.0)[0] != 0.0) return false;

  Rng rng = Rng::substream(411, 0);
  for (int i = 0; i < 5; ++i) {
    Vector x(1), y(1);
    x << 4.0 * rng.uniform01() - 2.0;
    y << 4.0 * rng.uniform01() - 2.0;
    const double c = 0.1 + rng.uniform01();
    const CompositeTerm t =
        make_box_l1_term(Vector::Constant(1, -1.5), Vector::Constant(1, 2.0), 0.7);
    const Vector exact = prox_map(t, x, y, c);
    const Vector brute = prox_bruteforce(t, x, y, c, 1e-4);
    if ((exact - brute).lpNorm<Eigen::Infinity>() > 2e-4) return false;
  }
  return true;
}

bool selftest_gradmap_lipschitz() {
  Rng rng = Rng::substream(412, 0);
  const CompositeTerm t =
      make_box_l1_term(Vector::Constant(2, -1.0), Vector::Constant(2, 1.5), 0.3);
  for (int i = 0; i < 2000; ++i) {
    Vector x(2), y1(2), y2(2);
    for (int j = 0; j < 2; ++j) {
      x[j] = 6.0 * rng.uniform01() - 3.0;
      y1[j] = 6.0 * rng.uniform01() - 3.0;
      y2[j] = 6.0 * rng.uniform01() - 3.0;
    }
    const double c = std::pow(10.0, 3.0 * (2.0 * rng.uniform01() - 1.0));
    const Vector g1 = gradient_mapping(t, x, y1, c).value;
    const Vector g2 = gradient_mapping(t, x, y2, c).value;
    if ((g1 - g2).norm() > (y1 - y2).norm() * (1.0 + 1e-9) + 1e-12) return false;
  }
  return true;
}

bool selftest_fd() {
  std::vector<SmoothProblem> suite;
  suite.push_back(make_quadratic(4, 2.0));
  suite.push_back(make_ill_conditioned_quadratic(100.0, 6));
  suite.push_back(make_sigmoidal_sum(4, 1.0));
  {
    Vector q = Vector::Constant(3, 1.0);
    suite.push_back(make_quadratic_plus_sigmoidal(q, 1.0));
  }
  Rng rng = Rng::substream(413, 0);
  for (const auto& p : suite) {
    const double h = p.lips_f > 0.0 ? 1e-4 : 1e-3;
    for (int i = 0; i < 20; ++i) {
      Vector x(p.dim);
      for (Eigen::Index j = 0; j < p.dim; ++j) x[j] = 4.0 * rng.uniform01() - 2.0;
      if (check_gradient_fd(p, x, h).max_rel_error > 1e-5) return false;
    }
  }
  return true;
}

bool selftest_reductions() {
  const SmoothProblem p = make_sigmoidal_sum(3, 1.0);
  Vector x0(3);
  x0 << 0.8, -1.1, 0.4;

  AlgorithmConfig cfg;
  cfg.schedule = make_schedule(Policy::det_nonconvex, p.lips(), 30, 0.0, 0.0, 0.0);
  cfg.mode = ScheduleMode::nonconvex;
  cfg.record_iterates = true;
  const RunTrace gd = run_ag(p, x0, cfg);
  for (const auto& r : gd.records) {
    const Vector& prev = r.k == 1 ? x0 : gd.records[static_cast<size_t>(r.k) - 2].x;
    if ((r.x_md - prev).lpNorm<Eigen::Infinity>() != 0.0) return false;
    if ((r.x_ag - r.x).lpNorm<Eigen::Infinity>() != 0.0) return false;
  }

  cfg.record_iterates = false;
  StochasticOracle exact = make_oracle(p, 0.0);
  Rng rng = Rng::substream(414, 0);
  AlgorithmConfig rcfg = cfg;
  rcfg.force_r = 30;
  const RunTrace det = run_ag(p, x0, cfg);
  const RunTrace sto = run_rsag(exact, x0, rcfg, rng);
  if ((det.out_x_ag - sto.out_x_ag).lpNorm<Eigen::Infinity>() != 0.0) return false;

  const RunTrace smooth = run_ag(p, x0, cfg);
  const RunTrace composite = run_ag_composite(p, make_zero_term(), x0, cfg);
  return (smooth.out_x_ag - composite.out_x_ag).lpNorm<Eigen::Infinity>() == 0.0;
}

bool selftest_termination_sampling() {
  const StepSchedule s = make_schedule(Policy::sto_convex, 1.0, 16, 1.0, 1.0);
  const std::vector<double> pmf = termination_pmf(s, 16, PmfMode::convex);
  std::vector<long long> counts(16, 0);
  Rng rng = Rng::substream(415, 0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i)
    ++counts[static_cast<size_t>(draw_termination_index(pmf, rng.uniform01())) - 1];
  double stat = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double expected = pmf[static_cast<size_t>(k)] * draws;
    stat += (counts[static_cast<size_t>(k)] - expected) *
            (counts[static_cast<size_t>(k)] - expected) / expected;
  }
  return stat < kChiSq999Df15;
}

bool selftest_round_trip() {
  const SmoothProblem p = make_quadratic(2, 1.0);
  Vector x0(2);
  x0 << 1.0, -0.5;
  AlgorithmConfig cfg;
  cfg.schedule = make_schedule(Policy::det_convex, 1.0, 7);
  cfg.mode = ScheduleMode::convex_det;
  const RunTrace t = run_ag_composite(p, make_box_term(Vector::Constant(2, -2.0),
                                                       Vector::Constant(2, 2.0)),
                                      x0, cfg);
  std::ostringstream os;
  emit_trace_csv(t, os);
  std::istringstream is(os.str());
  const std::vector<IterationRecord> parsed = parse_trace_csv(is);
  return trace_rows_csv(parsed) == os.str();
}

int run_selftest() {
  SelftestState st;
  st.check("gamma_recursion_and_telescoping", selftest_gamma());
  st.check("step_policy_examples", selftest_step_examples());
  st.check("c_coefficient_floor", selftest_c_floor());
  st.check("termination_pmf", selftest_pmf());
  st.check("prox_examples_and_bruteforce", selftest_prox());
  st.check("gradient_mapping_lipschitz", selftest_gradmap_lipschitz());
  st.check("finite_difference_gradients", selftest_fd());
  st.check("update_rule_reductions", selftest_reductions());
  st.check("termination_index_sampling", selftest_termination_sampling());
  st.check("trace_csv_round_trip", selftest_round_trip());
  std::cout << (st.failures == 0 ? "selftest passed"
                                 : "selftest FAILED (" + std::to_string(st.failures) +
                                       " checks)")
            << "\n";
  return st.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"accelerated gradient runner with convergence-bound verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> reps;
  bool quiet = false;

  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out, "override the config output directory");
  app.add_option("--reps", reps, "override the config replication count");
  app.add_flag("--quiet", quiet, "suppress per-cell reporting");

  CLI::App* cmd_run =
      app.add_subcommand("run", "execute the experiment and write all artifacts");
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "run bound checks only (no trace files)");
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "run every horizon from the config's n_sweep list");
  CLI::App* cmd_selftest =
      app.add_subcommand("selftest", "run built-in property checks");
  for (CLI::App* sc : {cmd_run, cmd_verify, cmd_sweep}) {
    sc->add_option("config", config_path, "experiment config (JSON)")->required();
    sc->fallthrough();
  }
  cmd_selftest->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_selftest->parsed()) return run_selftest();
    const RunKind kind = cmd_run->parsed()    ? RunKind::run
                         : cmd_verify->parsed() ? RunKind::verify
                                                : RunKind::sweep;
    return run_config(config_path, kind, seed, out, reps, quiet);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
