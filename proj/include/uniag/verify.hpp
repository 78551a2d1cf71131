#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uniag/algorithms.hpp"
#include "uniag/prox.hpp"
#include "uniag/problems.hpp"

namespace uniag {

// ---------------------------------------------------------------------------
// Independent oracles used to cross-check the analytic implementations.

struct FdCheck {
  double max_rel_error = 0.0;
  Vector fd_gradient;
};

// Central-difference gradient check; relative error is measured in the
// max norm against max(1, |grad|_inf).
inline FdCheck check_gradient_fd(const SmoothProblem& p, const Vector& x, double h) {
  if (!(h > 0.0) || h >= 1e-2)
    throw std::invalid_argument("check_gradient_fd: h outside (0, 1e-2)");
  const Evaluation e = eval_smooth(p, x);
  FdCheck out;
  out.fd_gradient.resize(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    out.fd_gradient[i] =
        (eval_smooth(p, xp).value - eval_smooth(p, xm).value) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  const double scale = std::max(1.0, e.gradient.lpNorm<Eigen::Infinity>());
  out.max_rel_error = (out.fd_gradient - e.gradient).lpNorm<Eigen::Infinity>() / scale;
  return out;
}

// Grid minimizer of <y,u> + |u-x|^2/(2c) + X(u) over the term's box domain.
// Intentionally brute force; only meant as a low-dimensional test oracle.
inline Vector prox_bruteforce(const CompositeTerm& t, const Vector& x, const Vector& y,
                              double c, double grid_step) {
  if (t.kind == TermKind::zero)
    throw std::invalid_argument("prox_bruteforce: zero term has unbounded domain");
  if (t.dim > 2) throw std::invalid_argument("prox_bruteforce: dimension > 2");
  if (!(grid_step > 0.0)) throw std::invalid_argument("prox_bruteforce: bad grid step");
  detail::check_prox_args(t, x, y, c);

  auto axis = [&](Eigen::Index i) {
    std::vector<double> v;
    for (double u = t.lo[i]; u < t.hi[i]; u += grid_step) v.push_back(u);
    v.push_back(t.hi[i]);
    return v;
  };
  auto objective = [&](const Vector& u) {
    double val = y.dot(u) + (u - x).squaredNorm() / (2.0 * c);
    if (t.kind == TermKind::box_l1) val += t.l1_weight * u.lpNorm<1>();
    return val;
  };

  Vector best(t.dim), u(t.dim);
  double best_val = std::numeric_limits<double>::infinity();
  const std::vector<double> a0 = axis(0);
  const std::vector<double> a1 =
      t.dim == 2 ? axis(1) : std::vector<double>{0.0};
  for (double u0 : a0) {
    u[0] = u0;
    for (double u1 : a1) {
      if (t.dim == 2) u[1] = u1;
      const double val = objective(u);
      if (val < best_val) {
        best_val = val;
        best = u;
      }
    }
  }
  return best;
}

// Least-squares slope of log(metric) against log(n). Expects a decaying
// metric sampled at four or more horizons.
inline double rate_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw std::invalid_argument("rate_slope: need >= 4 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, m] : points) {
    if (!(n > 0.0) || !(m > 0.0))
      throw std::invalid_argument("rate_slope: nonpositive point");
    const double lx = std::log(n), ly = std::log(m);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double np = static_cast<double>(points.size());
  return (np * sxy - sx * sy) / (np * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Monte-Carlo summaries.

struct McSummary {
  long long count = 0;
  double mean = 0.0;
  double stddev = 0.0;   // sample standard deviation (n-1)
  double stderr_val = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Sorts before accumulating so the estimate does not depend on the order
// replications were collected in.
inline McSummary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  std::sort(values.begin(), values.end());
  McSummary s;
  s.count = static_cast<long long>(values.size());
  s.min = values.front();
  s.max = values.back();
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(s.count);
  if (s.count > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.count - 1));
    s.stderr_val = s.stddev / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Terminal metrics extracted from finished runs.

enum class Metric {
  grad_sq_at_output,     // |grad psi(x_md_R)|^2, exact gradient
  psi_gap_at_output,     // psi(x_ag_R) - psi_star
  gradmap_sq_at_output,  // |G(x_md_R, grad psi(x_md_R), beta_R)|^2
  phi_gap_at_output,     // phi(x_ag_R) - phi_star
  min_grad_sq,           // min_k of the recorded gradient norms, squared
  min_gradmap_sq
};

inline double terminal_metric(const RunTrace& trace, const SmoothProblem& problem,
                              const CompositeTerm* term, Metric metric) {
  if (trace.records.empty()) throw std::invalid_argument("terminal_metric: empty trace");
  switch (metric) {
    case Metric::grad_sq_at_output:
      return eval_smooth(problem, trace.out_x_md).gradient.squaredNorm();
    case Metric::psi_gap_at_output: {
      if (!problem.psi_star)
        throw std::invalid_argument("terminal_metric: problem lacks psi_star");
      return eval_smooth(problem, trace.out_x_ag).value - *problem.psi_star;
    }
    case Metric::gradmap_sq_at_output: {
      if (!term) throw std::invalid_argument("terminal_metric: no composite term");
      const double beta = trace.records.back().beta;
      const Vector g = eval_smooth(problem, trace.out_x_md).gradient;
      return gradient_mapping(*term, trace.out_x_md, g, beta).value.squaredNorm();
    }
    case Metric::phi_gap_at_output: {
      if (!term) throw std::invalid_argument("terminal_metric: no composite term");
      if (!problem.x_star)
        throw std::invalid_argument("terminal_metric: problem lacks x_star");
      const ExtendedReal at_out = composite_value(*term, trace.out_x_ag);
      const ExtendedReal at_star = composite_value(*term, *problem.x_star);
      if (!at_out.finite || !at_star.finite)
        throw std::invalid_argument("terminal_metric: infinite composite value");
      const double phi_out = eval_smooth(problem, trace.out_x_ag).value + at_out.value;
      const double phi_star =
          eval_smooth(problem, *problem.x_star).value + at_star.value;
      return phi_out - phi_star;
    }
    case Metric::min_grad_sq: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : trace.records) {
        if (!r.grad_norm_md)
          throw std::invalid_argument("terminal_metric: gradient norms missing");
        best = std::min(best, *r.grad_norm_md * *r.grad_norm_md);
      }
      return best;
    }
    case Metric::min_gradmap_sq: {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& r : trace.records) {
        if (!r.gradmap_norm)
          throw std::invalid_argument("terminal_metric: gradient-mapping norms missing");
        best = std::min(best, *r.gradmap_norm * *r.gradmap_norm);
      }
      return best;
    }
  }
  throw std::logic_error("terminal_metric: unreachable");
}

// ---------------------------------------------------------------------------
// Bound checks. Each check compares an observed quantity (lhs) against the
// guaranteed ceiling (rhs); pass means lhs <= rhs and margin = rhs / lhs.

struct BoundReport {
  std::string bound_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = false;
  long long replications = 1;
  std::string detail;
};

namespace detail {

inline BoundReport finish_report(std::string id, double lhs, double rhs,
                                 long long reps, std::string detail_text) {
  BoundReport r;
  r.bound_id = std::move(id);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = lhs > 0.0 ? rhs / lhs : std::numeric_limits<double>::infinity();
  r.pass = lhs <= rhs;
  r.replications = reps;
  r.detail = std::move(detail_text);
  return r;
}

inline void require_policy(const RunTrace& trace, Policy p, const std::string& id) {
  if (trace.schedule.policy != p)
    throw std::invalid_argument("bound " + id + " requires the " + policy_name(p) +
                                " policy, trace used " +
                                policy_name(trace.schedule.policy));
}

inline void require_full_run(const RunTrace& trace, const std::string& id) {
  if (trace.r_index)
    throw std::invalid_argument("bound " + id + " applies to full-horizon runs");
  if (static_cast<int>(trace.records.size()) != trace.horizon)
    throw std::invalid_argument("bound " + id + ": trace is truncated");
}

inline double dist0_sq(const RunTrace& trace, const SmoothProblem& p,
                       const std::string& id) {
  if (!p.x_star) throw std::invalid_argument("bound " + id + ": problem lacks x_star");
  return (trace.x0 - *p.x_star).squaredNorm();
}

}  // namespace detail

// Full-horizon bounds of the smooth deterministic method.
inline BoundReport bound_deterministic(const RunTrace& trace, const SmoothProblem& p,
                                        const std::string& bound_id) {
  detail::require_full_run(trace, bound_id);
  const StepSchedule& s = trace.schedule;
  const double lips = s.lips;
  const double n = static_cast<double>(trace.horizon);

  if (bound_id == "thm1a") {
    if (!p.psi_star)
      throw std::invalid_argument("bound thm1a: problem lacks psi_star");
    const GammaTable gt = gamma_table(s, trace.horizon);
    double denom = 0.0;
    for (int k = 1; k <= trace.horizon; ++k) {
      const double c = c_coeff(s, gt, k);
      if (!(c > 0.0))
        throw std::invalid_argument("bound thm1a: C_k not positive at k=" +
                                    std::to_string(k));
      denom += step_triple(s, k).lambda * c;
    }
    const double lhs = terminal_metric(trace, p, nullptr, Metric::min_grad_sq);
    return detail::finish_report("thm1a", lhs, (trace.psi_x0 - *p.psi_star) / denom, 1,
                                 "min_k |grad|^2 vs (psi(x0)-psi*)/sum(lambda C)");
  }
  if (bound_id == "cor2a") {
    detail::require_policy(trace, Policy::det_nonconvex, bound_id);
    if (!p.psi_star)
      throw std::invalid_argument("bound cor2a: problem lacks psi_star");
    const double lhs = terminal_metric(trace, p, nullptr, Metric::min_grad_sq);
    return detail::finish_report("cor2a", lhs,
                                 6.0 * lips * (trace.psi_x0 - *p.psi_star) / n, 1,
                                 "min_k |grad|^2 vs 6 L (psi(x0)-psi*) / N");
  }
  if (bound_id == "cor2b_grad") {
    detail::require_policy(trace, Policy::det_convex, bound_id);
    const double d0 = detail::dist0_sq(trace, p, bound_id);
    const double lhs = terminal_metric(trace, p, nullptr, Metric::min_grad_sq);
    return detail::finish_report("cor2b_grad", lhs,
                                 96.0 * lips * lips * d0 / (n * n * (n + 1.0)), 1,
                                 "min_k |grad|^2 vs 96 L^2 d0^2 / (N^2 (N+1))");
  }
  if (bound_id == "cor2b_fun") {
    detail::require_policy(trace, Policy::det_convex, bound_id);
    if (!p.psi_star)
      throw std::invalid_argument("bound cor2b_fun: problem lacks psi_star");
    const double d0 = detail::dist0_sq(trace, p, bound_id);
    const double lhs = *trace.records.back().psi_ag - *p.psi_star;
    return detail::finish_report("cor2b_fun", lhs, 4.0 * lips * d0 / (n * (n + 1.0)), 1,
                                 "psi(x_ag_N)-psi* vs 4 L d0^2 / (N (N+1))");
  }
  throw std::invalid_argument("bound_deterministic: unknown bound '" + bound_id + "'");
}

// Full-horizon bounds of the composite deterministic method. problem.x_star
// must be an optimum of the composite objective psi + X.
inline BoundReport bound_composite(const RunTrace& trace, const SmoothProblem& p,
                                   const CompositeTerm& term,
                                   const std::string& bound_id) {
  detail::require_full_run(trace, bound_id);
  detail::require_policy(trace, Policy::det_convex, bound_id);
  const double lips = trace.schedule.lips;
  const double n = static_cast<double>(trace.horizon);
  const double d0 = detail::dist0_sq(trace, p, bound_id);

  if (bound_id == "cor3_gradmap") {
    double correction = 0.0;
    if (p.lips_f > 0.0) {
      const auto radius = domain_radius(term);
      if (!radius)
        throw std::invalid_argument(
            "bound cor3_gradmap: nonconvex part needs a bounded term domain");
      const double m = *radius;
      correction = p.lips_f * (p.x_star->squaredNorm() + 2.0 * m * m) / n;
    }
    const double lhs = terminal_metric(trace, p, &term, Metric::min_gradmap_sq);
    const double rhs =
        24.0 * lips * (4.0 * lips * d0 / (n * n * (n + 1.0)) + correction);
    return detail::finish_report("cor3_gradmap", lhs, rhs, 1,
                                 "min_k |G|^2 vs 24 L (4 L d0^2/(N^2(N+1)) + Lf(|x*|^2+2M^2)/N)");
  }
  if (bound_id == "cor3_fun") {
    if (p.lips_f != 0.0)
      throw std::invalid_argument("bound cor3_fun: requires lips_f = 0");
    const double lhs =
        terminal_metric(trace, p, &term, Metric::phi_gap_at_output);
    return detail::finish_report("cor3_fun", lhs, 4.0 * lips * d0 / (n * (n + 1.0)), 1,
                                 "phi(x_ag_N)-phi* vs 4 L d0^2 / (N (N+1))");
  }
  throw std::invalid_argument("bound_composite: unknown bound '" + bound_id + "'");
}

// Inputs of the expectation bounds for randomized runs.
struct StochasticBoundParams {
  double lips = 0.0;
  double lips_f = 0.0;
  double sigma = 0.0;
  double d_tilde = 0.0;
  int horizon = 0;
  double psi0_gap = 0.0;       // psi(x0) - psi_star
  double dist0_sq = 0.0;       // |x0 - x_star|^2
  double xstar_norm_sq = 0.0;
  double domain_radius = 0.0;  // M; only read when lips_f > 0
  std::vector<long long> batch_sizes;  // m_1..m_N, required by cor5 ids
};

// Expectation bounds, checked against mean + 2 stderr of the replicated
// terminal metric.
inline BoundReport bound_stochastic(const McSummary& mc,
                                    const StochasticBoundParams& q,
                                    const std::string& bound_id) {
  if (mc.count < 200)
    throw std::invalid_argument("bound_stochastic: needs >= 200 replications");
  if (q.horizon < 1) throw std::invalid_argument("bound_stochastic: horizon < 1");
  if (!(q.lips > 0.0)) throw std::invalid_argument("bound_stochastic: lips <= 0");
  const double n = static_cast<double>(q.horizon);
  const double lhs = mc.mean + 2.0 * mc.stderr_val;

  auto need_d = [&]() {
    if (!(q.d_tilde > 0.0))
      throw std::invalid_argument("bound_stochastic: d_tilde <= 0");
  };
  auto need_batches = [&]() {
    if (static_cast<int>(q.batch_sizes.size()) != q.horizon)
      throw std::invalid_argument("bound_stochastic: batch sizes must cover 1..N");
    for (long long m : q.batch_sizes)
      if (m < 1) throw std::invalid_argument("bound_stochastic: batch size < 1");
  };
  const double nonconvex_load =
      q.lips_f * (q.xstar_norm_sq + 2.0 * q.domain_radius * q.domain_radius);

  double rhs;
  if (bound_id == "cor4a") {
    need_d();
    rhs = 21.0 * q.lips * q.psi0_gap / (4.0 * n) +
          2.0 * q.sigma / std::sqrt(n) * (q.psi0_gap / q.d_tilde + q.lips * q.d_tilde);
  } else if (bound_id == "cor4b_grad") {
    need_d();
    rhs = 96.0 * q.lips * q.lips * q.dist0_sq / (n * n * n) +
          std::sqrt(q.lips) * std::pow(q.sigma, 1.5) / std::pow(n, 0.75) *
              (12.0 * q.dist0_sq / std::pow(q.d_tilde, 1.5) +
               2.0 * std::sqrt(q.d_tilde));
  } else if (bound_id == "cor4b_fun") {
    need_d();
    rhs = 48.0 * q.lips * q.dist0_sq / (n * n) +
          12.0 * q.sigma / std::sqrt(n) * (q.dist0_sq / q.d_tilde + q.d_tilde);
  } else if (bound_id == "cor5_gradmap") {
    need_batches();
    double batch_load = 0.0;
    for (int k = 1; k <= q.horizon; ++k)
      batch_load += static_cast<double>(k) * k /
                    static_cast<double>(q.batch_sizes[static_cast<size_t>(k) - 1]);
    rhs = 96.0 * q.lips *
          (4.0 * q.lips * q.dist0_sq / (n * n * (n + 1.0)) + nonconvex_load / n +
           3.0 * q.sigma * q.sigma / (q.lips * n * n * n) * batch_load);
  } else if (bound_id == "cor5_fun") {
    if (q.lips_f != 0.0)
      throw std::invalid_argument("bound cor5_fun: requires lips_f = 0");
    need_batches();
    double prefix = 0.0, total = 0.0;
    for (int k = 1; k <= q.horizon; ++k) {
      prefix += static_cast<double>(k) * k /
                static_cast<double>(q.batch_sizes[static_cast<size_t>(k) - 1]);
      total += prefix;
    }
    rhs = 12.0 * q.lips * q.dist0_sq / (n * (n + 1.0)) +
          7.0 * q.sigma * q.sigma / (q.lips * n * n * n) * total;
  } else if (bound_id == "cor6") {
    need_d();
    rhs = 96.0 * q.lips *
          (4.0 * q.lips * (q.dist0_sq + q.d_tilde * q.d_tilde) / (n * n * n) +
           (nonconvex_load + 3.0 * q.lips_f * q.d_tilde * q.d_tilde) / n);
  } else if (bound_id == "cor7") {
    need_d();
    rhs = 96.0 * q.lips *
          (4.0 * q.lips * q.dist0_sq / (n * n * n) +
           (nonconvex_load + 3.0 * q.d_tilde * q.d_tilde) / n);
  } else {
    throw std::invalid_argument("bound_stochastic: unknown bound '" + bound_id + "'");
  }
  return detail::finish_report(bound_id, lhs, rhs, mc.count,
                               "mean + 2 stderr vs expectation ceiling");
}

// ---------------------------------------------------------------------------
// Markov tail check: Prob{ sample >= lambda * u } <= 1/lambda for the
// expectation ceiling u, verified with a two-stderr allowance.

struct TailCheck {
  double lambda = 0.0;
  double threshold = 0.0;
  double freq = 0.0;
  double stderr_val = 0.0;
  double limit = 0.0;
  bool pass = false;
};

inline std::vector<TailCheck> markov_tail_check(const std::vector<double>& samples,
                                                double ceiling,
                                                const std::vector<double>& lambdas) {
  if (samples.empty()) throw std::invalid_argument("markov_tail_check: no samples");
  if (!(ceiling > 0.0)) throw std::invalid_argument("markov_tail_check: ceiling <= 0");
  std::vector<TailCheck> out;
  const double count = static_cast<double>(samples.size());
  for (double lam : lambdas) {
    if (!(lam > 0.0)) throw std::invalid_argument("markov_tail_check: lambda <= 0");
    TailCheck t;
    t.lambda = lam;
    t.threshold = lam * ceiling;
    long long hits = 0;
    for (double s : samples)
      if (s >= t.threshold) ++hits;
    t.freq = static_cast<double>(hits) / count;
    t.stderr_val = std::sqrt(t.freq * (1.0 - t.freq) / count);
    t.limit = 1.0 / lam;
    t.pass = t.freq - 2.0 * t.stderr_val <= t.limit;
    out.push_back(t);
  }
  return out;
}

}  // namespace uniag
