#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uniag/algorithms.hpp"
#include "uniag/trace_io.hpp"
#include "uniag/verify.hpp"
#include "uniag/version.hpp"

namespace uniag {

using Json = nlohmann::ordered_json;

struct TermSpec {
  std::string kind = "zero";  // zero | box | box_l1
  Vector lo, hi;              // broadcast from scalars at parse time
  double l1_weight = 0.0;
};

struct X0Spec {
  std::string kind = "zeros";  // zeros | ones | coords
  double scale = 1.0;
  Vector values;
};

struct EmitFlags {
  bool trace = true;
  bool bounds = true;
  bool summary = true;
};

struct BatchSpec {
  BatchVariant variant = BatchVariant::fixed;
  long long fixed_m = 1;
  std::optional<double> d_tilde;
};

struct ExperimentConfig {
  ProblemSpec problem;
  TermSpec term;
  std::string algorithm = "ag";
  std::string policy = "det_nonconvex";
  double lambda_choice = 1.0;
  double sigma = 0.0;
  std::optional<double> d_tilde;
  std::vector<int> horizons;
  bool from_sweep_list = false;
  std::uint64_t seed = 0;
  int replications = 1;
  BatchSpec batch;
  X0Spec x0;
  std::optional<double> pg_stepsize;
  bool record_iterates = false;
  std::vector<std::string> bounds;
  std::vector<double> markov_lambdas;
  EmitFlags emit;
  std::string out_dir = "out";
};

inline const std::set<std::string>& known_bound_ids() {
  static const std::set<std::string> ids = {
      "thm1a",       "cor2a",   "cor2b_grad", "cor2b_fun", "cor3_gradmap",
      "cor3_fun",    "cor4a",   "cor4b_grad", "cor4b_fun", "cor5_gradmap",
      "cor5_fun",    "cor6",    "cor7"};
  return ids;
}

// ---------------------------------------------------------------------------
// Config parsing. Errors name the offending field.

namespace detail {

inline std::invalid_argument config_error(const std::string& field,
                                          const std::string& what) {
  return std::invalid_argument("config: field '" + field + "' " + what);
}

inline Vector json_to_vector(const Json& j, Eigen::Index dim,
                             const std::string& field) {
  if (j.is_number()) return Vector::Constant(dim, j.get<double>());
  if (j.is_array()) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& e : j) {
      if (!e.is_number()) throw config_error(field, "must hold numbers");
      v[i++] = e.get<double>();
    }
    return v;
  }
  throw config_error(field, "must be a number or an array of numbers");
}

template <typename T>
T json_get(const Json& j, const std::string& field, const T& fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const Json::exception&) {
    throw config_error(field, "has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const Json& j) {
  ExperimentConfig c;
  const int schema = detail::json_get<int>(j, "schema_version", -1);
  if (schema != kConfigSchemaVersion)
    throw detail::config_error("schema_version",
                               "must be " + std::to_string(kConfigSchemaVersion));

  if (!j.contains("problem") || !j.at("problem").is_object())
    throw detail::config_error("problem", "is required");
  const Json& pj = j.at("problem");
  c.problem.family = detail::json_get<std::string>(pj, "family", "");
  if (c.problem.family.empty()) throw detail::config_error("problem.family", "is required");
  c.problem.dim = detail::json_get<Eigen::Index>(pj, "dim", 1);
  if (c.problem.dim < 1) throw detail::config_error("problem.dim", "must be >= 1");
  if (pj.contains("diag"))
    c.problem.diag = detail::json_to_vector(pj.at("diag"), c.problem.dim, "problem.diag");
  if (pj.contains("b"))
    c.problem.b = detail::json_to_vector(pj.at("b"), c.problem.dim, "problem.b");
  c.problem.cond = detail::json_get<double>(pj, "cond", 10.0);
  c.problem.scale = detail::json_get<double>(pj, "scale", 1.0);
  c.problem.sigmoid_weight = detail::json_get<double>(pj, "sigmoid_weight", 1.0);

  if (j.contains("term")) {
    const Json& tj = j.at("term");
    c.term.kind = detail::json_get<std::string>(tj, "kind", "zero");
    if (c.term.kind != "zero" && c.term.kind != "box" && c.term.kind != "box_l1")
      throw detail::config_error("term.kind", "must be zero, box, or box_l1");
    if (c.term.kind != "zero") {
      if (!tj.contains("lo") || !tj.contains("hi"))
        throw detail::config_error("term", "box kinds need lo and hi");
      c.term.lo = detail::json_to_vector(tj.at("lo"), c.problem.dim, "term.lo");
      c.term.hi = detail::json_to_vector(tj.at("hi"), c.problem.dim, "term.hi");
      c.term.l1_weight = detail::json_get<double>(tj, "l1_weight", 0.0);
    }
  }

  c.algorithm = detail::json_get<std::string>(j, "algorithm", "ag");
  static const std::set<std::string> algos = {"ag", "ag_composite", "rsag",
                                              "rsag_composite", "projected_gradient"};
  if (!algos.count(c.algorithm))
    throw detail::config_error("algorithm", "unknown value '" + c.algorithm + "'");

  if (j.contains("policy")) {
    const Json& qj = j.at("policy");
    c.policy = detail::json_get<std::string>(qj, "name", "det_nonconvex");
    policy_from_name(c.policy);  // validates
    c.lambda_choice = detail::json_get<double>(qj, "lambda_choice", 1.0);
    if (c.lambda_choice < 0.0 || c.lambda_choice > 1.0)
      throw detail::config_error("policy.lambda_choice", "must lie in [0,1]");
    c.sigma = detail::json_get<double>(qj, "sigma", 0.0);
    if (c.sigma < 0.0) throw detail::config_error("policy.sigma", "must be >= 0");
    if (qj.contains("d_tilde")) {
      c.d_tilde = detail::json_get<double>(qj, "d_tilde", 0.0);
      if (*c.d_tilde <= 0.0) throw detail::config_error("policy.d_tilde", "must be > 0");
    }
  }

  if (j.contains("n") == j.contains("n_sweep"))
    throw detail::config_error("n", "exactly one of n / n_sweep is required");
  if (j.contains("n")) {
    c.horizons.push_back(detail::json_get<int>(j, "n", 0));
  } else {
    c.from_sweep_list = true;
    if (!j.at("n_sweep").is_array())
      throw detail::config_error("n_sweep", "must be an array");
    for (const auto& e : j.at("n_sweep")) c.horizons.push_back(e.get<int>());
  }
  if (c.horizons.empty()) throw detail::config_error("n_sweep", "must not be empty");
  for (int n : c.horizons)
    if (n < 1) throw detail::config_error("n", "horizons must be >= 1");

  c.seed = detail::json_get<std::uint64_t>(j, "seed", 0);
  c.replications = detail::json_get<int>(j, "replications", 1);
  if (c.replications < 1) throw detail::config_error("replications", "must be >= 1");

  if (j.contains("batch")) {
    const Json& bj = j.at("batch");
    const std::string v = detail::json_get<std::string>(bj, "variant", "fixed");
    if (v == "fixed")
      c.batch.variant = BatchVariant::fixed;
    else if (v == "horizon_dependent")
      c.batch.variant = BatchVariant::horizon_dependent;
    else if (v == "horizon_free")
      c.batch.variant = BatchVariant::horizon_free;
    else
      throw detail::config_error("batch.variant", "unknown value '" + v + "'");
    c.batch.fixed_m = detail::json_get<long long>(bj, "m", 1);
    if (c.batch.fixed_m < 1) throw detail::config_error("batch.m", "must be >= 1");
    if (bj.contains("d_tilde")) {
      c.batch.d_tilde = detail::json_get<double>(bj, "d_tilde", 0.0);
      if (*c.batch.d_tilde <= 0.0)
        throw detail::config_error("batch.d_tilde", "must be > 0");
    }
  }

  if (j.contains("x0")) {
    const Json& xj = j.at("x0");
    c.x0.kind = detail::json_get<std::string>(xj, "kind", "zeros");
    if (c.x0.kind != "zeros" && c.x0.kind != "ones" && c.x0.kind != "coords")
      throw detail::config_error("x0.kind", "must be zeros, ones, or coords");
    c.x0.scale = detail::json_get<double>(xj, "scale", 1.0);
    if (c.x0.kind == "coords") {
      if (!xj.contains("values"))
        throw detail::config_error("x0.values", "required for kind coords");
      c.x0.values = detail::json_to_vector(xj.at("values"), c.problem.dim, "x0.values");
    }
  }

  if (j.contains("pg_stepsize")) {
    c.pg_stepsize = detail::json_get<double>(j, "pg_stepsize", 0.0);
    if (*c.pg_stepsize <= 0.0)
      throw detail::config_error("pg_stepsize", "must be > 0");
  }
  c.record_iterates = detail::json_get<bool>(j, "record_iterates", false);

  if (j.contains("bounds")) {
    if (!j.at("bounds").is_array())
      throw detail::config_error("bounds", "must be an array");
    for (const auto& e : j.at("bounds")) {
      const std::string id = e.get<std::string>();
      if (!known_bound_ids().count(id))
        throw detail::config_error("bounds", "unknown bound id '" + id + "'");
      c.bounds.push_back(id);
    }
  }
  if (j.contains("markov_lambdas")) {
    for (const auto& e : j.at("markov_lambdas")) {
      const double lam = e.get<double>();
      if (lam <= 0.0)
        throw detail::config_error("markov_lambdas", "entries must be > 0");
      c.markov_lambdas.push_back(lam);
    }
  }

  if (j.contains("emit")) {
    const Json& ej = j.at("emit");
    c.emit.trace = detail::json_get<bool>(ej, "trace", true);
    c.emit.bounds = detail::json_get<bool>(ej, "bounds", true);
    c.emit.summary = detail::json_get<bool>(ej, "summary", true);
  }
  c.out_dir = detail::json_get<std::string>(j, "out_dir", "out");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open '" + path + "'");
  Json j;
  try {
    is >> j;
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config: invalid JSON in '" + path + "': " + e.what());
  }
  return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Execution.

struct CellResult {
  int horizon = 0;
  StepSchedule schedule;
  double d_tilde_batch = 0.0;
  long long total_oracle_calls = 0;
  std::vector<RunTrace> traces;
  std::vector<std::pair<std::string, McSummary>> metrics;
  std::vector<BoundReport> bound_reports;
  std::vector<TailCheck> tails;
  double markov_ceiling = 0.0;
};

struct ExperimentResult {
  SmoothProblem problem;
  CompositeTerm term;
  bool has_term = false;
  Vector x0;
  std::vector<CellResult> cells;
  bool all_pass = true;
};

// Spec-level summary over replicated runs of one metric.
inline McSummary aggregate_monte_carlo(const std::vector<RunTrace>& traces,
                                       const SmoothProblem& problem,
                                       const CompositeTerm* term, Metric metric) {
  if (traces.empty())
    throw std::invalid_argument("aggregate_monte_carlo: no traces");
  std::vector<double> values;
  values.reserve(traces.size());
  for (const auto& t : traces) values.push_back(terminal_metric(t, problem, term, metric));
  return summarize(std::move(values));
}

namespace detail {

inline ScheduleMode mode_for_policy(Policy p) {
  switch (p) {
    case Policy::det_nonconvex:
    case Policy::sto_nonconvex:
      return ScheduleMode::nonconvex;
    case Policy::det_convex:
      return ScheduleMode::convex_det;
    case Policy::sto_convex:
      return ScheduleMode::convex_sto;
    case Policy::custom:
      break;
  }
  return ScheduleMode::nonconvex;
}

inline Metric metric_for_bound(const std::string& id) {
  if (id == "cor4a" || id == "cor4b_grad") return Metric::grad_sq_at_output;
  if (id == "cor4b_fun") return Metric::psi_gap_at_output;
  if (id == "cor5_fun") return Metric::phi_gap_at_output;
  return Metric::gradmap_sq_at_output;  // cor5_gradmap, cor6, cor7
}

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::grad_sq_at_output: return "grad_sq_at_output";
    case Metric::psi_gap_at_output: return "psi_gap_at_output";
    case Metric::gradmap_sq_at_output: return "gradmap_sq_at_output";
    case Metric::phi_gap_at_output: return "phi_gap_at_output";
    case Metric::min_grad_sq: return "min_grad_sq";
    case Metric::min_gradmap_sq: return "min_gradmap_sq";
  }
  return "metric";
}

inline bool is_stochastic_bound(const std::string& id) {
  return id == "cor4a" || id == "cor4b_grad" || id == "cor4b_fun" ||
         id == "cor5_gradmap" || id == "cor5_fun" || id == "cor6" || id == "cor7";
}

// Index-addressed parallel map; the result layout is independent of thread
// scheduling, keeping replicated runs deterministic.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  const int workers = std::max(1, std::min<int>(hw == 0 ? 1 : static_cast<int>(hw), count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

inline Vector resolve_x0(const X0Spec& s, Eigen::Index dim) {
  if (s.kind == "zeros") return Vector::Zero(dim);
  if (s.kind == "ones") return Vector::Constant(dim, s.scale);
  if (s.values.size() != dim)
    throw std::invalid_argument("config: field 'x0.values' has wrong dimension");
  return s.values;
}

inline CompositeTerm resolve_term(const TermSpec& s) {
  if (s.kind == "zero") return make_zero_term();
  if (s.kind == "box") return make_box_term(s.lo, s.hi);
  return make_box_l1_term(s.lo, s.hi, s.l1_weight);
}

// Default scale parameter for the stochastic policies when the config does
// not pin one: sqrt((psi(x0)-psi*)/L) for the nonconvex policy, |x0-x*| for
// the convex one.
inline double resolve_d_tilde(const std::optional<double>& override_value,
                              Policy policy, const SmoothProblem& p, const Vector& x0,
                              double psi0, double lips) {
  if (override_value) return *override_value;
  if (policy == Policy::sto_nonconvex) {
    if (!p.psi_star)
      throw std::invalid_argument(
          "config: sto_nonconvex needs policy.d_tilde (problem lacks psi_star)");
    return std::sqrt(std::max(psi0 - *p.psi_star, 1e-300) / lips);
  }
  if (!p.x_star)
    throw std::invalid_argument(
        "config: stochastic run needs a d_tilde (problem lacks x_star)");
  const double d = (x0 - *p.x_star).norm();
  if (!(d > 0.0))
    throw std::invalid_argument("config: d_tilde defaults to |x0-x*| which is 0; set it");
  return d;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.problem = make_problem(cfg.problem);
  result.term = resolve_term(cfg.term);
  result.has_term = cfg.term.kind != "zero";
  result.x0 = resolve_x0(cfg.x0, result.problem.dim);

  const bool composite_algo = cfg.algorithm == "ag_composite" ||
                              cfg.algorithm == "rsag_composite" ||
                              cfg.algorithm == "projected_gradient";
  if (composite_algo && result.has_term && result.term.dim != result.problem.dim)
    throw std::invalid_argument("config: term dimension does not match problem");
  const bool stochastic_algo =
      cfg.algorithm == "rsag" || cfg.algorithm == "rsag_composite";

  const double psi0 = eval_smooth(result.problem, result.x0).value;
  const double lips = result.problem.lips();
  const Policy policy = policy_from_name(cfg.policy);

  for (int n : cfg.horizons) {
    CellResult cell;
    cell.horizon = n;

    double d_tilde = 0.0;
    if (policy == Policy::sto_nonconvex || policy == Policy::sto_convex)
      d_tilde = resolve_d_tilde(cfg.d_tilde, policy, result.problem, result.x0, psi0, lips);
    cell.schedule =
        make_schedule(policy, lips, n, cfg.sigma, d_tilde, cfg.lambda_choice);

    AlgorithmConfig acfg;
    acfg.schedule = cell.schedule;
    acfg.mode = detail::mode_for_policy(cell.schedule.policy);
    acfg.record_iterates = cfg.record_iterates;
    acfg.batch.variant = cfg.batch.variant;
    acfg.batch.fixed_m = cfg.batch.fixed_m;
    if (cfg.algorithm == "rsag_composite" && cfg.batch.variant != BatchVariant::fixed) {
      acfg.batch.d_tilde = resolve_d_tilde(cfg.batch.d_tilde, Policy::sto_convex,
                                           result.problem, result.x0, psi0, lips);
      cell.d_tilde_batch = acfg.batch.d_tilde;
    } else if (cfg.batch.d_tilde) {
      acfg.batch.d_tilde = *cfg.batch.d_tilde;
      cell.d_tilde_batch = *cfg.batch.d_tilde;
    }

    const int reps = stochastic_algo ? cfg.replications : 1;
    cell.traces.resize(static_cast<size_t>(reps));
    const std::uint64_t cell_seed = mix64(cfg.seed) ^ mix64(static_cast<std::uint64_t>(n));

    detail::parallel_for(reps, [&](int r) {
      try {
        if (cfg.algorithm == "ag") {
          cell.traces[static_cast<size_t>(r)] = run_ag(result.problem, result.x0, acfg);
        } else if (cfg.algorithm == "ag_composite") {
          cell.traces[static_cast<size_t>(r)] =
              run_ag_composite(result.problem, result.term, result.x0, acfg);
        } else if (cfg.algorithm == "projected_gradient") {
          const double step = cfg.pg_stepsize ? *cfg.pg_stepsize : 1.0 / lips;
          cell.traces[static_cast<size_t>(r)] = run_projected_gradient(
              result.problem, result.term, result.x0, step, n, cfg.record_iterates);
        } else {
          Rng rng = Rng::substream(cell_seed, static_cast<std::uint64_t>(r));
          StochasticOracle oracle = make_oracle(result.problem, cfg.sigma);
          if (cfg.algorithm == "rsag") {
            cell.traces[static_cast<size_t>(r)] =
                run_rsag(oracle, result.x0, acfg, rng);
          } else {
            cell.traces[static_cast<size_t>(r)] =
                run_rsag_composite(oracle, result.term, result.x0, acfg, rng);
          }
        }
        cell.traces[static_cast<size_t>(r)].seed = cfg.seed;
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("cell n=" + std::to_string(n) + " replication " +
                                 std::to_string(r) + ": " + e.what());
      }
    });
    for (const auto& t : cell.traces) cell.total_oracle_calls += t.oracle_calls;

    // Bound checks requested by the config.
    const CompositeTerm* term_ptr = result.has_term ? &result.term : nullptr;
    for (const std::string& id : cfg.bounds) {
      if (!detail::is_stochastic_bound(id)) {
        const RunTrace& t = cell.traces.front();
        BoundReport rep =
            (id == "cor3_gradmap" || id == "cor3_fun")
                ? bound_composite(t, result.problem, result.term, id)
                : bound_deterministic(t, result.problem, id);
        cell.bound_reports.push_back(std::move(rep));
        continue;
      }
      const Metric metric = detail::metric_for_bound(id);
      const McSummary mc = aggregate_monte_carlo(cell.traces, result.problem,
                                                 term_ptr, metric);
      StochasticBoundParams q;
      q.lips = cell.schedule.lips;
      q.lips_f = result.problem.lips_f;
      q.sigma = cfg.sigma;
      q.d_tilde = (id == "cor5_gradmap" || id == "cor5_fun" || id == "cor6" ||
                   id == "cor7")
                      ? cell.d_tilde_batch
                      : cell.schedule.d_tilde;
      q.horizon = n;
      if (result.problem.psi_star) q.psi0_gap = psi0 - *result.problem.psi_star;
      if (result.problem.x_star) {
        q.dist0_sq = (result.x0 - *result.problem.x_star).squaredNorm();
        q.xstar_norm_sq = result.problem.x_star->squaredNorm();
      }
      if (auto radius = domain_radius(result.term)) q.domain_radius = *radius;
      if (id == "cor5_gradmap" || id == "cor5_fun") {
        q.batch_sizes.reserve(static_cast<size_t>(n));
        for (int k = 1; k <= n; ++k)
          q.batch_sizes.push_back(
              cfg.batch.variant == BatchVariant::fixed
                  ? cfg.batch.fixed_m
                  : minibatch_size(cfg.batch.variant, k, cfg.sigma, lips,
                                   result.problem.lips_f, cell.d_tilde_batch, n));
      }
      cell.bound_reports.push_back(bound_stochastic(mc, q, id));
      bool seen = false;
      for (const auto& [name, s] : cell.metrics)
        seen = seen || name == detail::metric_name(metric);
      if (!seen) cell.metrics.emplace_back(detail::metric_name(metric), mc);

      if (id == "cor4a" && !cfg.markov_lambdas.empty()) {
        std::vector<double> samples;
        samples.reserve(cell.traces.size());
        for (const auto& t : cell.traces)
          samples.push_back(terminal_metric(t, result.problem, term_ptr, metric));
        cell.markov_ceiling = cell.bound_reports.back().rhs;
        cell.tails = markov_tail_check(samples, cell.markov_ceiling, cfg.markov_lambdas);
      }
    }

    // Always summarize the final smooth value so summaries exist even
    // without bound requests.
    {
      std::vector<double> finals;
      finals.reserve(cell.traces.size());
      for (const auto& t : cell.traces) finals.push_back(*t.records.back().psi_ag);
      cell.metrics.emplace_back("psi_ag_final", summarize(std::move(finals)));
    }

    for (const auto& b : cell.bound_reports) result.all_pass = result.all_pass && b.pass;
    for (const auto& t : cell.tails) result.all_pass = result.all_pass && t.pass;
    result.cells.push_back(std::move(cell));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Artifact emission. Reports echo the fully resolved config; nothing
// time-dependent is written, so reruns are byte-identical.

inline Json config_echo_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  Json pj;
  pj["family"] = cfg.problem.family;
  pj["dim"] = cfg.problem.dim;
  if (cfg.problem.diag.size()) {
    Json d = Json::array();
    for (Eigen::Index i = 0; i < cfg.problem.diag.size(); ++i)
      d.push_back(cfg.problem.diag[i]);
    pj["diag"] = d;
  }
  if (cfg.problem.b.size()) {
    Json d = Json::array();
    for (Eigen::Index i = 0; i < cfg.problem.b.size(); ++i) d.push_back(cfg.problem.b[i]);
    pj["b"] = d;
  }
  if (cfg.problem.family == "ill_conditioned_quadratic") pj["cond"] = cfg.problem.cond;
  if (cfg.problem.family == "sigmoidal_sum") pj["scale"] = cfg.problem.scale;
  if (cfg.problem.family == "quadratic_plus_sigmoidal")
    pj["sigmoid_weight"] = cfg.problem.sigmoid_weight;
  j["problem"] = pj;

  Json tj;
  tj["kind"] = cfg.term.kind;
  if (cfg.term.kind != "zero") {
    Json lo = Json::array(), hi = Json::array();
    for (Eigen::Index i = 0; i < cfg.term.lo.size(); ++i) lo.push_back(cfg.term.lo[i]);
    for (Eigen::Index i = 0; i < cfg.term.hi.size(); ++i) hi.push_back(cfg.term.hi[i]);
    tj["lo"] = lo;
    tj["hi"] = hi;
    if (cfg.term.kind == "box_l1") tj["l1_weight"] = cfg.term.l1_weight;
  }
  j["term"] = tj;

  j["algorithm"] = cfg.algorithm;
  Json qj;
  qj["name"] = cfg.policy;
  qj["lambda_choice"] = cfg.lambda_choice;
  qj["sigma"] = cfg.sigma;
  if (!res.cells.empty() && res.cells.front().schedule.d_tilde > 0.0)
    qj["d_tilde"] = res.cells.front().schedule.d_tilde;
  j["policy"] = qj;

  Json x0 = Json::array();
  for (Eigen::Index i = 0; i < res.x0.size(); ++i) x0.push_back(res.x0[i]);
  j["x0"] = x0;

  Json ns = Json::array();
  for (const auto& c : res.cells) ns.push_back(c.horizon);
  j["n_cells"] = ns;
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  Json bj;
  bj["variant"] = batch_variant_name(cfg.batch.variant);
  if (cfg.batch.variant == BatchVariant::fixed) bj["m"] = cfg.batch.fixed_m;
  if (!res.cells.empty() && res.cells.front().d_tilde_batch > 0.0)
    bj["d_tilde"] = res.cells.front().d_tilde_batch;
  j["batch"] = bj;
  j["bounds"] = cfg.bounds;
  if (!cfg.markov_lambdas.empty()) j["markov_lambdas"] = cfg.markov_lambdas;
  j["record_iterates"] = cfg.record_iterates;
  j["out_dir"] = cfg.out_dir;
  return j;
}

inline Json bounds_report_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["library_version"] = kLibraryVersion;
  j["seed"] = cfg.seed;
  j["config"] = config_echo_json(cfg, res);
  Json cells = Json::array();
  for (const auto& c : res.cells) {
    Json cj;
    cj["n"] = c.horizon;
    Json bounds = Json::array();
    for (const auto& b : c.bound_reports) {
      Json bjj;
      bjj["bound_id"] = b.bound_id;
      bjj["lhs"] = b.lhs;
      bjj["rhs"] = b.rhs;
      bjj["margin"] = b.margin;
      bjj["pass"] = b.pass;
      bjj["replications"] = b.replications;
      bjj["detail"] = b.detail;
      bounds.push_back(bjj);
    }
    cj["bounds"] = bounds;
    if (!c.tails.empty()) {
      Json tails = Json::array();
      for (const auto& t : c.tails) {
        Json tj;
        tj["lambda"] = t.lambda;
        tj["threshold"] = t.threshold;
        tj["freq"] = t.freq;
        tj["stderr"] = t.stderr_val;
        tj["limit"] = t.limit;
        tj["pass"] = t.pass;
        tails.push_back(tj);
      }
      cj["markov"] = tails;
      cj["markov_ceiling"] = c.markov_ceiling;
    }
    cells.push_back(cj);
  }
  j["cells"] = cells;
  j["all_pass"] = res.all_pass;
  return j;
}

inline Json summary_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["library_version"] = kLibraryVersion;
  j["seed"] = cfg.seed;
  j["config"] = config_echo_json(cfg, res);
  Json cells = Json::array();
  for (const auto& c : res.cells) {
    Json cj;
    cj["n"] = c.horizon;
    cj["replications"] = static_cast<long long>(c.traces.size());
    cj["total_oracle_calls"] = c.total_oracle_calls;
    Json metrics;
    for (const auto& [name, s] : c.metrics) {
      Json mj;
      mj["count"] = s.count;
      mj["mean"] = s.mean;
      mj["stddev"] = s.stddev;
      mj["stderr"] = s.stderr_val;
      mj["min"] = s.min;
      mj["max"] = s.max;
      metrics[name] = mj;
    }
    cj["metrics"] = metrics;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

// Writes the requested artifacts; returns the emitted file paths.
inline std::vector<std::string> emit_artifacts(const ExperimentConfig& cfg,
                                               const ExperimentResult& res) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  fs::create_directories(cfg.out_dir);
  auto write_text = [&](const std::string& name, const std::string& text) {
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit: cannot write " + path.string());
    os << text;
    written.push_back(path.string());
  };
  if (cfg.emit.trace) {
    for (const auto& cell : res.cells)
      for (size_t r = 0; r < cell.traces.size(); ++r)
        write_text("trace_n" + std::to_string(cell.horizon) + "_r" + std::to_string(r) +
                       ".csv",
                   trace_rows_csv(cell.traces[r].records));
  }
  if (cfg.emit.bounds)
    write_text("bounds.json", bounds_report_json(cfg, res).dump(2) + "\n");
  if (cfg.emit.summary)
    write_text("summary.json", summary_json(cfg, res).dump(2) + "\n");
  return written;
}

}  // namespace uniag
