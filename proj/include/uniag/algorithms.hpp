#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uniag/oracle.hpp"
#include "uniag/prox.hpp"
#include "uniag/schedules.hpp"

namespace uniag {

struct IterationRecord {
  int k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  std::optional<double> gamma;
  std::optional<long long> batch;
  std::optional<double> psi_md;
  std::optional<double> psi_ag;
  std::optional<double> phi_ag;
  std::optional<double> grad_norm_md;
  std::optional<double> gradmap_norm;
  // Iterate snapshots, populated only when AlgorithmConfig::record_iterates.
  Vector x, x_md, x_ag;
};

struct RunTrace {
  std::string algorithm;
  StepSchedule schedule;
  int horizon = 0;
  std::uint64_t seed = 0;
  std::optional<int> r_index;      // randomized termination index, when drawn
  long long oracle_calls = 0;
  double wall_time_s = 0.0;        // in-memory diagnostic, never serialized
  Vector x0;
  double psi_x0 = 0.0;
  Vector out_x, out_x_md, out_x_ag;
  std::vector<IterationRecord> records;
};

struct BatchRule {
  BatchVariant variant = BatchVariant::fixed;
  long long fixed_m = 1;
  double d_tilde = 0.0;  // scale parameter of the growing-batch formulas
};

struct AlgorithmConfig {
  StepSchedule schedule;
  ScheduleMode mode = ScheduleMode::nonconvex;
  bool record_iterates = false;
  double divergence_guard = 1e12;
  std::optional<int> force_r;  // testing hook: pins the termination index
  BatchRule batch;
};

// Picks index in 1..pmf.size() via inverse CDF on a single uniform draw.
inline int draw_termination_index(const std::vector<double>& pmf, double u) {
  if (pmf.empty()) throw std::invalid_argument("draw_termination_index: empty pmf");
  double cum = 0.0;
  for (size_t i = 0; i + 1 < pmf.size(); ++i) {
    cum += pmf[i];
    if (u < cum) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(pmf.size());
}

namespace detail {

struct EngineSetup {
  const SmoothProblem* problem = nullptr;
  const StochasticOracle* oracle = nullptr;  // null: exact gradients
  const CompositeTerm* term = nullptr;       // null: smooth updates
  std::optional<PmfMode> pmf_mode;           // set: randomized termination
  Rng* rng = nullptr;
};

inline void check_start_point(const SmoothProblem& p, const Vector& x0) {
  if (x0.size() != p.dim)
    throw std::invalid_argument("run: x0 has dimension " + std::to_string(x0.size()) +
                                ", problem expects " + std::to_string(p.dim));
  if (!x0.allFinite()) throw std::invalid_argument("run: x0 has non-finite coordinates");
}

inline void check_guard(const Vector& v, double guard, int k) {
  if (v.lpNorm<Eigen::Infinity>() > guard)
    throw std::runtime_error("run: iterate magnitude exceeded " + std::to_string(guard) +
                             " at k=" + std::to_string(k) + ", aborting divergent run");
}

inline long long resolve_batch(const EngineSetup& su, const AlgorithmConfig& cfg, int k) {
  if (!su.oracle || su.oracle->noise == NoiseModel::none) return 1;
  if (cfg.batch.variant == BatchVariant::fixed) {
    if (cfg.batch.fixed_m < 1)
      throw std::invalid_argument("run: fixed batch size must be >= 1");
    return cfg.batch.fixed_m;
  }
  return minibatch_size(cfg.batch.variant, k, su.oracle->sigma, cfg.schedule.lips,
                        su.oracle->base.lips_f, cfg.batch.d_tilde,
                        cfg.schedule.horizon);
}

// Shared body of the accelerated runs. The smooth update x - c*g and the
// zero-term prox evaluate the same floating-point expression, so composite
// runs with a zero term reproduce smooth runs bit for bit; likewise the
// midpoint form x_ag + alpha*(x - x_ag) collapses exactly to x when the
// two sequences have merged (beta_k = lambda_k).
inline RunTrace run_engine(const EngineSetup& su, const Vector& x0,
                           const AlgorithmConfig& cfg, const char* algo_name) {
  const SmoothProblem& problem = su.oracle ? su.oracle->base : *su.problem;
  check_start_point(problem, x0);
  const int horizon = cfg.schedule.horizon;
  if (horizon < 1) throw std::invalid_argument("run: schedule horizon < 1");

  const ScheduleValidation val = validate_schedule(cfg.schedule, horizon, cfg.mode);
  if (!val.ok)
    throw std::invalid_argument(std::string("run: schedule rejected for mode ") +
                                schedule_mode_name(cfg.mode) + ": " + val.summary());

  const auto t_begin = std::chrono::steady_clock::now();
  const GammaTable gt = gamma_table(cfg.schedule, horizon);

  int last = horizon;
  RunTrace trace;
  if (su.pmf_mode) {
    const std::vector<double> pmf = termination_pmf(cfg.schedule, horizon, *su.pmf_mode);
    if (cfg.force_r) {
      if (*cfg.force_r < 1 || *cfg.force_r > horizon)
        throw std::invalid_argument("run: force_r outside 1..horizon");
      last = *cfg.force_r;
    } else {
      last = draw_termination_index(pmf, su.rng->uniform01());
    }
    trace.r_index = last;
  }

  trace.algorithm = algo_name;
  trace.schedule = cfg.schedule;
  trace.horizon = horizon;
  trace.x0 = x0;
  trace.psi_x0 = eval_smooth(problem, x0).value;
  trace.records.reserve(static_cast<size_t>(last));

  const double noise_scale =
      su.oracle && su.oracle->noise != NoiseModel::none
          ? su.oracle->sigma / std::sqrt(static_cast<double>(problem.dim))
          : 0.0;

  Vector x = x0;
  Vector x_ag = x0;
  Vector x_md(x0.size()), g(x0.size()), noise(x0.size());
  long long calls = 0;

  for (int k = 1; k <= last; ++k) {
    const StepTriple st = step_triple(cfg.schedule, k);
    x_md = x_ag + st.alpha * (x - x_ag);

    const Evaluation e_md = eval_smooth(problem, x_md);
    const long long m = resolve_batch(su, cfg, k);
    if (noise_scale > 0.0) {
      noise.setZero();
      for (long long i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < noise.size(); ++j) noise[j] += su.rng->normal();
      g = e_md.gradient + (noise_scale / static_cast<double>(m)) * noise;
    } else {
      g = e_md.gradient;
    }
    calls += su.oracle ? m : 1;

    Vector x_next = su.term ? prox_map(*su.term, x, g, st.lambda) : x - st.lambda * g;
    Vector x_ag_next =
        su.term ? prox_map(*su.term, x_md, g, st.beta) : x_md - st.beta * g;
    check_guard(x_next, cfg.divergence_guard, k);
    check_guard(x_ag_next, cfg.divergence_guard, k);

    IterationRecord rec;
    rec.k = k;
    rec.alpha = st.alpha;
    rec.beta = st.beta;
    rec.lambda = st.lambda;
    rec.gamma = gt.at(k);
    if (su.oracle) rec.batch = m;
    rec.psi_md = e_md.value;
    rec.grad_norm_md = g.norm();
    const double psi_ag = eval_smooth(problem, x_ag_next).value;
    rec.psi_ag = psi_ag;
    if (su.term) {
      const ExtendedReal xv = composite_value(*su.term, x_ag_next);
      if (!xv.finite)
        throw std::runtime_error("run: aggregated iterate left the term domain");
      rec.phi_ag = psi_ag + xv.value;
      rec.gradmap_norm = ((x_md - x_ag_next) / st.beta).norm();
    }
    if (cfg.record_iterates) {
      rec.x = x_next;
      rec.x_md = x_md;
      rec.x_ag = x_ag_next;
    }
    trace.records.push_back(std::move(rec));

    x = std::move(x_next);
    x_ag = std::move(x_ag_next);
  }

  trace.oracle_calls = calls;
  trace.out_x = std::move(x);
  trace.out_x_md = std::move(x_md);
  trace.out_x_ag = std::move(x_ag);
  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return trace;
}

}  // namespace detail

inline RunTrace run_ag(const SmoothProblem& problem, const Vector& x0,
                       const AlgorithmConfig& cfg) {
  detail::EngineSetup su;
  su.problem = &problem;
  return detail::run_engine(su, x0, cfg, "ag");
}

inline RunTrace run_ag_composite(const SmoothProblem& problem, const CompositeTerm& term,
                                 const Vector& x0, const AlgorithmConfig& cfg) {
  detail::EngineSetup su;
  su.problem = &problem;
  su.term = &term;
  return detail::run_engine(su, x0, cfg, "ag_composite");
}

// Randomized termination: the output index R is drawn up front from the
// mode's pmf, a single stochastic gradient drives both sequence updates.
inline RunTrace run_rsag(const StochasticOracle& oracle, const Vector& x0,
                         const AlgorithmConfig& cfg, Rng& rng) {
  detail::EngineSetup su;
  su.oracle = &oracle;
  su.rng = &rng;
  su.pmf_mode = cfg.mode == ScheduleMode::nonconvex ? PmfMode::nonconvex : PmfMode::convex;
  AlgorithmConfig c = cfg;
  c.batch = BatchRule{};  // single-sample variant
  return detail::run_engine(su, x0, c, "rsag");
}

// Mini-batched composite variant; always terminates via the convex pmf and
// averages cfg.batch samples per iteration.
inline RunTrace run_rsag_composite(const StochasticOracle& oracle,
                                   const CompositeTerm& term, const Vector& x0,
                                   const AlgorithmConfig& cfg, Rng& rng) {
  detail::EngineSetup su;
  su.oracle = &oracle;
  su.term = &term;
  su.rng = &rng;
  su.pmf_mode = PmfMode::convex;
  return detail::run_engine(su, x0, cfg, "rsag_composite");
}

// Fixed-stepsize baseline p_k = prox(p_{k-1}, grad psi(p_{k-1}), stepsize).
inline RunTrace run_projected_gradient(const SmoothProblem& problem,
                                       const CompositeTerm& term, const Vector& x0,
                                       double stepsize, int horizon,
                                       bool record_iterates = false,
                                       double divergence_guard = 1e12) {
  detail::check_start_point(problem, x0);
  if (horizon < 1) throw std::invalid_argument("run: horizon < 1");
  if (!(stepsize > 0.0) || stepsize > 1.0 / problem.lips())
    throw std::invalid_argument("run: projected-gradient stepsize outside (0, 1/L]");

  const auto t_begin = std::chrono::steady_clock::now();
  RunTrace trace;
  trace.algorithm = "projected_gradient";
  trace.horizon = horizon;
  trace.x0 = x0;
  trace.psi_x0 = eval_smooth(problem, x0).value;
  trace.records.reserve(static_cast<size_t>(horizon));

  Vector p = x0;
  Vector p_prev(x0.size());
  for (int k = 1; k <= horizon; ++k) {
    p_prev = p;
    const Evaluation e = eval_smooth(problem, p_prev);
    p = prox_map(term, p_prev, e.gradient, stepsize);
    detail::check_guard(p, divergence_guard, k);

    IterationRecord rec;
    rec.k = k;
    rec.alpha = 1.0;
    rec.beta = stepsize;
    rec.lambda = stepsize;
    rec.psi_md = e.value;
    rec.grad_norm_md = e.gradient.norm();
    const double psi = eval_smooth(problem, p).value;
    rec.psi_ag = psi;
    const ExtendedReal xv = composite_value(term, p);
    if (!xv.finite) throw std::runtime_error("run: iterate left the term domain");
    rec.phi_ag = psi + xv.value;
    rec.gradmap_norm = ((p_prev - p) / stepsize).norm();
    if (record_iterates) {
      rec.x = p;
      rec.x_md = p_prev;
      rec.x_ag = p;
    }
    trace.records.push_back(std::move(rec));
  }

  trace.oracle_calls = horizon;
  trace.out_x = p;
  trace.out_x_md = std::move(p_prev);
  trace.out_x_ag = std::move(p);
  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return trace;
}

}  // namespace uniag
