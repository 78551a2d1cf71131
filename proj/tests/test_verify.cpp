#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "uniag/algorithms.hpp"
#include "uniag/problems.hpp"
#include "uniag/verify.hpp"

namespace uniag {
namespace {

Vector scalar(double v) {
  Vector x(1);
  x << v;
  return x;
}

AlgorithmConfig config_for(Policy policy, double lips, int horizon,
                           double lambda_choice = 1.0) {
  AlgorithmConfig cfg;
  cfg.schedule = make_schedule(policy, lips, horizon, 0.0, 0.0, lambda_choice);
  cfg.mode = policy == Policy::det_convex ? ScheduleMode::convex_det
                                          : ScheduleMode::nonconvex;
  return cfg;
}

TEST(CheckGradientFd, TightOnQuadratic) {
  const SmoothProblem p = make_quadratic(2, 1.0);
  Vector x(2);
  x << 3.0, 4.0;
  const FdCheck c = check_gradient_fd(p, x, 1e-5);
  EXPECT_LE(c.max_rel_error, 1e-9);
  EXPECT_NEAR(c.fd_gradient[0], 3.0, 1e-8);
}

TEST(CheckGradientFd, SuiteStaysBelowTolerance) {
  std::vector<SmoothProblem> suite;
  suite.push_back(make_quadratic(3, 2.0, 0.5));
  suite.push_back(make_ill_conditioned_quadratic(1000.0, 5));
  suite.push_back(make_sigmoidal_sum(3, 1.0));
  {
    Vector q = Vector::Constant(2, 1.5);
    suite.push_back(make_quadratic_plus_sigmoidal(q, 2.0));
  }
  Rng rng = Rng::substream(41, 0);
  for (const auto& p : suite) {
    const double h = p.lips() > 100.0 ? 1e-5 : 1e-4;
    for (int i = 0; i < 100; ++i) {
      Vector x(p.dim);
      for (Eigen::Index j = 0; j < p.dim; ++j) x[j] = 4.0 * rng.uniform01() - 2.0;
      EXPECT_LE(check_gradient_fd(p, x, h).max_rel_error, 1e-5) << p.name;
    }
  }
}

TEST(CheckGradientFd, DetectsCorruptedGradient) {
  SmoothProblem p = make_quadratic(2, 1.0);
  const auto orig = p.eval_impl;
  p.eval_impl = [orig](const Vector& x) {
    Evaluation e = orig(x);
    e.gradient[0] += 0.1;
    return e;
  };
  Vector x(2);
  x << 0.2, 0.3;
  EXPECT_GE(check_gradient_fd(p, x, 1e-5).max_rel_error, 0.05);
}

TEST(CheckGradientFd, ValidatesStepWidth) {
  const SmoothProblem p = make_quadratic(1, 1.0);
  EXPECT_THROW(check_gradient_fd(p, scalar(1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(check_gradient_fd(p, scalar(1.0), 1e-2), std::invalid_argument);
}

TEST(ProxBruteforce, MatchesClosedFormExample) {
  const CompositeTerm box = make_box_term(1, -1.0, 1.0);
  const Vector b = prox_bruteforce(box, scalar(0.5), scalar(3.0), 1.0, 1e-4);
  EXPECT_NEAR(b[0], -1.0, 2e-4);
}

TEST(ProxBruteforce, Validation) {
  const CompositeTerm box3 = make_box_term(3, -1.0, 1.0);
  Vector v3 = Vector::Zero(3);
  EXPECT_THROW(prox_bruteforce(box3, v3, v3, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(
      prox_bruteforce(make_zero_term(), scalar(0.0), scalar(1.0), 1.0, 0.1),
      std::invalid_argument);
  const CompositeTerm box1 = make_box_term(1, -1.0, 1.0);
  EXPECT_THROW(prox_bruteforce(box1, scalar(0.0), scalar(1.0), 1.0, 0.0),
               std::invalid_argument);
}

TEST(RateSlope, ExactOnPurePowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {10.0, 20.0, 40.0, 80.0}) pts.emplace_back(n, 5.0 / (n * n));
  EXPECT_NEAR(rate_slope(pts), -2.0, 1e-12);
}

TEST(RateSlope, FunctionBoundCeilingDecaysAtExpectedRate) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {10.0, 20.0, 40.0, 80.0})
    pts.emplace_back(n, 16.0 / (n * (n + 1.0)));
  EXPECT_NEAR(rate_slope(pts), -2.0, 0.05);
}

TEST(RateSlope, Validation) {
  std::vector<std::pair<double, double>> three = {{1.0, 1.0}, {2.0, 0.5}, {4.0, 0.25}};
  EXPECT_THROW(rate_slope(three), std::invalid_argument);
  std::vector<std::pair<double, double>> bad = {
      {1.0, 1.0}, {2.0, 0.5}, {4.0, 0.25}, {8.0, 0.0}};
  EXPECT_THROW(rate_slope(bad), std::invalid_argument);
}

TEST(Summarize, FrozenExample) {
  const McSummary s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(s.count, 4);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stderr_val, 0.6454972243679028, 1e-15);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 4.0);
}

TEST(Summarize, OrderInvariantBitwise) {
  const std::vector<double> a = {0.1, 0.7, 1e-3, 5.0, 2.2, 0.9};
  std::vector<double> b = {5.0, 0.9, 0.1, 2.2, 1e-3, 0.7};
  const McSummary sa = summarize(a);
  const McSummary sb = summarize(std::move(b));
  EXPECT_EQ(sa.mean, sb.mean);
  EXPECT_EQ(sa.stddev, sb.stddev);
  EXPECT_EQ(sa.stderr_val, sb.stderr_val);
}

TEST(Summarize, RejectsEmpty) {
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(TerminalMetric, MatchesDirectEvaluation) {
  const SmoothProblem p = make_quadratic(1, 1.0);
  const AlgorithmConfig cfg = config_for(Policy::det_convex, 1.0, 6);
  const RunTrace t = run_ag(p, scalar(2.0), cfg);
  const double g = eval_smooth(p, t.out_x_md).gradient.squaredNorm();
  EXPECT_DOUBLE_EQ(terminal_metric(t, p, nullptr, Metric::grad_sq_at_output), g);
  const double gap = eval_smooth(p, t.out_x_ag).value;
  EXPECT_DOUBLE_EQ(terminal_metric(t, p, nullptr, Metric::psi_gap_at_output), gap);
  double best = 1e300;
  for (const auto& r : t.records)
    best = std::min(best, *r.grad_norm_md * *r.grad_norm_md);
  EXPECT_DOUBLE_EQ(terminal_metric(t, p, nullptr, Metric::min_grad_sq), best);
  EXPECT_THROW(terminal_metric(t, p, nullptr, Metric::gradmap_sq_at_output),
               std::invalid_argument);
}

TEST(TerminalMetric, CompositeMetricsUseLastBeta) {
  const SmoothProblem p = make_quadratic(1, 1.0, 0.2);
  const CompositeTerm box = make_box_term(1, -1.0, 1.0);
  const AlgorithmConfig cfg = config_for(Policy::det_convex, 1.0, 5);
  const RunTrace t = run_ag_composite(p, box, scalar(0.9), cfg);
  const double beta = t.records.back().beta;
  const Vector g = eval_smooth(p, t.out_x_md).gradient;
  const double expect =
      gradient_mapping(box, t.out_x_md, g, beta).value.squaredNorm();
  EXPECT_DOUBLE_EQ(terminal_metric(t, p, &box, Metric::gradmap_sq_at_output), expect);
  EXPECT_GE(terminal_metric(t, p, &box, Metric::phi_gap_at_output), -1e-15);
}

TEST(BoundDeterministic, NonconvexPolicyCeilingExample) {
  // psi(x0) - psi* = 2 and N = 12 make the ceiling exactly 6 L gap / N = 1.
  const SmoothProblem p = make_quadratic(1, 1.0);
  const AlgorithmConfig cfg = config_for(Policy::det_nonconvex, 1.0, 12);
  const RunTrace t = run_ag(p, scalar(2.0), cfg);
  const BoundReport r = bound_deterministic(t, p, "cor2a");
  EXPECT_DOUBLE_EQ(r.rhs, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.margin, 1.0);
}

TEST(BoundDeterministic, GenericCeilingConsistentWithSchedule) {
  const SmoothProblem p = make_sigmoidal_sum(2, 1.0);
  Vector x0(2);
  x0 << 1.0, -2.0;
  const AlgorithmConfig cfg = config_for(Policy::det_nonconvex, p.lips(), 16, 0.5);
  const RunTrace t = run_ag(p, x0, cfg);
  const BoundReport r = bound_deterministic(t, p, "thm1a");
  const GammaTable gt = gamma_table(t.schedule, 16);
  double denom = 0.0;
  for (int k = 1; k <= 16; ++k)
    denom += step_triple(t.schedule, k).lambda * c_coeff(t.schedule, gt, k);
  EXPECT_NEAR(r.rhs, (t.psi_x0 - 0.0) / denom, 1e-15 * r.rhs);
  EXPECT_TRUE(r.pass);
}

TEST(BoundDeterministic, ConvexPairFrozenTwoStepValues) {
  const SmoothProblem p = make_quadratic(1, 1.0);
  const AlgorithmConfig cfg = config_for(Policy::det_convex, 1.0, 2);
  const RunTrace t = run_ag(p, scalar(2.0), cfg);

  const BoundReport fun = bound_deterministic(t, p, "cor2b_fun");
  EXPECT_NEAR(fun.lhs, 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(fun.rhs, 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(fun.margin, 12.0, 1e-12);
  EXPECT_TRUE(fun.pass);

  const BoundReport grad = bound_deterministic(t, p, "cor2b_grad");
  EXPECT_NEAR(grad.lhs, 16.0 / 9.0, 1e-15);
  EXPECT_NEAR(grad.rhs, 32.0, 1e-12);
  EXPECT_NEAR(grad.margin, 18.0, 1e-12);
}

TEST(BoundDeterministic, GuardsPolicyAndCompleteness) {
  const SmoothProblem p = make_quadratic(1, 1.0);
  const AlgorithmConfig det = config_for(Policy::det_convex, 1.0, 4);
  const RunTrace t = run_ag(p, scalar(2.0), det);
  EXPECT_THROW(bound_deterministic(t, p, "cor2a"), std::invalid_argument);
  EXPECT_THROW(bound_deterministic(t, p, "nope"), std::invalid_argument);

  AlgorithmConfig sto = config_for(Policy::det_convex, 1.0, 8);
  sto.schedule = make_schedule(Policy::sto_convex, 1.0, 8, 1.0, 2.0);
  sto.mode = ScheduleMode::convex_sto;
  sto.force_r = 3;
  const StochasticOracle oracle = make_oracle(p, 1.0);
  Rng rng = Rng::substream(61, 0);
  const RunTrace truncated = run_rsag(oracle, scalar(2.0), sto, rng);
  EXPECT_THROW(bound_deterministic(truncated, p, "cor2b_fun"), std::invalid_argument);
}

TEST(BoundComposite, GradientMappingAndFunctionGapOnInteriorOptimum) {
  // Box-constrained quadratic whose unconstrained optimum sits inside.
  const SmoothProblem p = make_quadratic(4, 1.0, 0.5);
  const CompositeTerm box = make_box_term(4, -1.0, 1.0);
  const Vector x0 = Vector::Constant(4, -0.9);
  for (int n : {10, 100}) {
    const AlgorithmConfig cfg = config_for(Policy::det_convex, 1.0, n);
    const RunTrace t = run_ag_composite(p, box, x0, cfg);
    const BoundReport g = bound_composite(t, p, box, "cor3_gradmap");
    EXPECT_TRUE(g.pass) << "n=" << n << " margin=" << g.margin;
    const BoundReport f = bound_composite(t, p, box, "cor3_fun");
    EXPECT_TRUE(f.pass) << "n=" << n << " margin=" << f.margin;
    const double d0 = (x0 - *p.x_star).squaredNorm();
    EXPECT_NEAR(f.rhs, 4.0 * d0 / (n * (n + 1.0)), 1e-12);
  }
}

TEST(BoundComposite, NonconvexPartNeedsBoundedDomainAndForbidsFunGap) {
  Vector q = Vector::Constant(3, 1.0);
  const SmoothProblem p = make_quadratic_plus_sigmoidal(q, 1.0);
  const CompositeTerm box = make_box_term(3, -1.0, 1.0);
  const Vector x0 = Vector::Constant(3, 0.9);
  const AlgorithmConfig cfg = config_for(Policy::det_convex, p.lips(), 20);
  const RunTrace t = run_ag_composite(p, box, x0, cfg);
  const BoundReport g = bound_composite(t, p, box, "cor3_gradmap");
  // Ceiling includes the nonsmoothness load 24 L Lf (|x*|^2 + 2 M^2) / N.
  const double d0 = x0.squaredNorm();
  const double expected =
      24.0 * 3.0 * (4.0 * 3.0 * d0 / (20.0 * 20.0 * 21.0) + 2.0 * (0.0 + 6.0) / 20.0);
  EXPECT_NEAR(g.rhs, expected, 1e-12);
  EXPECT_THROW(bound_composite(t, p, box, "cor3_fun"), std::invalid_argument);
}

McSummary fake_mc(long long count, double mean, double stderr_val) {
  McSummary s;
  s.count = count;
  s.mean = mean;
  s.stderr_val = stderr_val;
  s.stddev = stderr_val * std::sqrt(static_cast<double>(count));
  s.min = mean;
  s.max = mean;
  return s;
}

TEST(BoundStochastic, FrozenCeilings) {
  StochasticBoundParams q;
  q.lips = 1.0;
  q.sigma = 1.0;
  q.d_tilde = std::sqrt(2.0);
  q.horizon = 100;
  q.psi0_gap = 2.0;
  const BoundReport a = bound_stochastic(fake_mc(1000, 0.1, 0.001), q, "cor4a");
  EXPECT_NEAR(a.rhs, 0.6706854249492381, 1e-15);
  EXPECT_NEAR(a.lhs, 0.102, 1e-15);
  EXPECT_TRUE(a.pass);

  StochasticBoundParams qb;
  qb.lips = 1.0;
  qb.sigma = 1.0;
  qb.d_tilde = 2.0;
  qb.horizon = 100;
  qb.dist0_sq = 4.0;
  const BoundReport b = bound_stochastic(fake_mc(1000, 1.0, 0.01), qb, "cor4b_fun");
  EXPECT_NEAR(b.rhs, 48.0 * 4.0 / 1e4 + 1.2 * (4.0 / 2.0 + 2.0), 1e-12);

  StochasticBoundParams qc;
  qc.lips = 1.0;
  qc.sigma = 1.0;
  qc.d_tilde = 1.0;
  qc.horizon = 10;
  qc.dist0_sq = 4.0;
  const BoundReport c = bound_stochastic(fake_mc(500, 1.0, 0.01), qc, "cor7");
  EXPECT_NEAR(c.rhs, 96.0 * (4.0 * 4.0 / 1000.0 + 3.0 / 10.0), 1e-12);

  StochasticBoundParams qd = qc;
  qd.lips = 3.0;
  qd.lips_f = 2.0;
  qd.domain_radius = std::sqrt(3.0);
  const BoundReport d = bound_stochastic(fake_mc(500, 1.0, 0.01), qd, "cor6");
  EXPECT_NEAR(d.rhs,
              96.0 * 3.0 *
                  (4.0 * 3.0 * (4.0 + 1.0) / 1000.0 + (2.0 * 6.0 + 3.0 * 2.0) / 10.0),
              1e-12);
}

TEST(BoundStochastic, BatchLoadSumsMatchHandFormula) {
  StochasticBoundParams q;
  q.lips = 1.0;
  q.sigma = 1.0;
  q.d_tilde = 10.0;
  q.horizon = 4;
  q.dist0_sq = 4.0;
  q.batch_sizes = {1, 4, 9, 16};  // m_k = k^2: each k^2/m_k = 1
  const BoundReport g = bound_stochastic(fake_mc(300, 1e-6, 1e-8), q, "cor5_gradmap");
  EXPECT_NEAR(g.rhs,
              96.0 * (4.0 * 4.0 / (16.0 * 5.0) + 3.0 / 64.0 * 4.0), 1e-12);

  const BoundReport f = bound_stochastic(fake_mc(300, 1e-6, 1e-8), q, "cor5_fun");
  // prefix sums: 1, 2, 3, 4 -> total 10.
  EXPECT_NEAR(f.rhs, 12.0 * 4.0 / 20.0 + 7.0 / 64.0 * 10.0, 1e-12);

  StochasticBoundParams bad = q;
  bad.batch_sizes = {1, 4};
  EXPECT_THROW(bound_stochastic(fake_mc(300, 1e-6, 1e-8), bad, "cor5_fun"),
               std::invalid_argument);
  StochasticBoundParams lf = q;
  lf.lips_f = 1.0;
  EXPECT_THROW(bound_stochastic(fake_mc(300, 1e-6, 1e-8), lf, "cor5_fun"),
               std::invalid_argument);
}

TEST(BoundStochastic, RequiresEnoughReplications) {
  StochasticBoundParams q;
  q.lips = 1.0;
  q.sigma = 1.0;
  q.d_tilde = 1.0;
  q.horizon = 10;
  EXPECT_THROW(bound_stochastic(fake_mc(100, 0.1, 0.01), q, "cor4a"),
               std::invalid_argument);
  EXPECT_THROW(bound_stochastic(fake_mc(400, 0.1, 0.01), q, "no_such_bound"),
               std::invalid_argument);
}

TEST(BoundStochastic, FailsHonestlyWhenMeanExceedsCeiling) {
  StochasticBoundParams q;
  q.lips = 1.0;
  q.sigma = 1.0;
  q.d_tilde = 1.0;
  q.horizon = 10000;
  q.psi0_gap = 1e-6;
  const BoundReport r = bound_stochastic(fake_mc(300, 10.0, 0.1), q, "cor4a");
  EXPECT_FALSE(r.pass);
  EXPECT_LT(r.margin, 1.0);
}

TEST(MarkovTailCheck, FrequencyAgainstInverseLambda) {
  std::vector<double> samples;
  for (int i = 1; i <= 100; ++i) samples.push_back(static_cast<double>(i) / 100.0);
  // Mean ~ 0.5; ceiling 1.0; threshold 2: nothing exceeds it.
  const std::vector<TailCheck> t = markov_tail_check(samples, 1.0, {2.0, 4.0});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t[0].freq, 0.0);
  EXPECT_TRUE(t[0].pass);
  EXPECT_DOUBLE_EQ(t[0].threshold, 2.0);
  EXPECT_DOUBLE_EQ(t[0].limit, 0.5);

  // Degenerate sample set violating the inequality gets flagged.
  const std::vector<double> all_high(50, 10.0);
  const std::vector<TailCheck> bad = markov_tail_check(all_high, 1.0, {2.0});
  EXPECT_FALSE(bad[0].pass);
  EXPECT_DOUBLE_EQ(bad[0].freq, 1.0);
}

TEST(MarkovTailCheck, Validation) {
  EXPECT_THROW(markov_tail_check({}, 1.0, {2.0}), std::invalid_argument);
  EXPECT_THROW(markov_tail_check({1.0}, 0.0, {2.0}), std::invalid_argument);
  EXPECT_THROW(markov_tail_check({1.0}, 1.0, {0.0}), std::invalid_argument);
}

}  // namespace
}  // namespace uniag
