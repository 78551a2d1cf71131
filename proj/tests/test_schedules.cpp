#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "uniag/schedules.hpp"

namespace uniag {
namespace {

TEST(StepTriple, DetNonconvexExamples) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 8, 0.0, 0.0, 1.0);
  const StepTriple k1 = step_triple(s, 1);
  EXPECT_DOUBLE_EQ(k1.alpha, 1.0);
  EXPECT_DOUBLE_EQ(k1.beta, 0.5);
  EXPECT_DOUBLE_EQ(k1.lambda, 0.625);
  const StepTriple k3 = step_triple(s, 3);
  EXPECT_DOUBLE_EQ(k3.alpha, 0.5);
  EXPECT_DOUBLE_EQ(k3.beta, 0.5);
  EXPECT_DOUBLE_EQ(k3.lambda, 0.5625);
}

TEST(StepTriple, DetNonconvexLambdaChoiceInterval) {
  // lambda_choice slides lambda across [beta, beta(1 + alpha/4)].
  const StepSchedule lo = make_schedule(Policy::det_nonconvex, 2.0, 8, 0.0, 0.0, 0.0);
  const StepSchedule mid = make_schedule(Policy::det_nonconvex, 2.0, 8, 0.0, 0.0, 0.5);
  for (int k = 1; k <= 8; ++k) {
    const StepTriple a = step_triple(lo, k);
    EXPECT_DOUBLE_EQ(a.lambda, a.beta);
    const StepTriple b = step_triple(mid, k);
    EXPECT_DOUBLE_EQ(b.lambda, b.beta * (1.0 + 0.5 * b.alpha / 4.0));
  }
}

TEST(StepTriple, DetConvexExample) {
  const StepSchedule s = make_schedule(Policy::det_convex, 1.0, 8);
  const StepTriple k4 = step_triple(s, 4);
  EXPECT_DOUBLE_EQ(k4.alpha, 0.4);
  EXPECT_DOUBLE_EQ(k4.beta, 0.5);
  EXPECT_DOUBLE_EQ(k4.lambda, 1.0);
}

TEST(StepTriple, StoConvexExample) {
  const StepSchedule s = make_schedule(Policy::sto_convex, 1.0, 16, 1.0, 1.0);
  EXPECT_NEAR(step_triple(s, 1).beta, 0.125, 1e-15);
  EXPECT_NEAR(step_triple(s, 1).lambda, 1.0 / 128.0, 1e-15);
  EXPECT_NEAR(step_triple(s, 16).lambda, 0.125, 1e-15);
}

TEST(StepTriple, StoConvexBetaCappedByDeterministicValue) {
  // Low noise: the noise-driven branch exceeds 1/(2L) and is clipped.
  const StepSchedule s = make_schedule(Policy::sto_convex, 1.0, 4, 1e-6, 1.0);
  EXPECT_DOUBLE_EQ(step_triple(s, 2).beta, 0.5);
}

TEST(StepTriple, StoNonconvexBetaBranches) {
  // Noise branch active: d/(sigma sqrt(N)) = 0.1414 < 8/(21 L).
  const StepSchedule noisy =
      make_schedule(Policy::sto_nonconvex, 1.0, 100, 1.0, std::sqrt(2.0));
  EXPECT_NEAR(step_triple(noisy, 5).beta, std::sqrt(2.0) / 10.0, 1e-15);
  // Quiet: capped at 8/(21 L).
  const StepSchedule quiet =
      make_schedule(Policy::sto_nonconvex, 1.0, 100, 1e-9, std::sqrt(2.0));
  EXPECT_NEAR(step_triple(quiet, 5).beta, 8.0 / 21.0, 1e-15);
}

TEST(StepTriple, SigmaZeroFallsBackToDeterministic) {
  const StepSchedule a = make_schedule(Policy::sto_nonconvex, 2.0, 8, 0.0, 0.0, 1.0);
  EXPECT_EQ(a.policy, Policy::det_nonconvex);
  const StepSchedule b = make_schedule(Policy::sto_convex, 2.0, 8);
  EXPECT_EQ(b.policy, Policy::det_convex);
  const StepSchedule ref = make_schedule(Policy::det_convex, 2.0, 8);
  for (int k = 1; k <= 8; ++k) {
    EXPECT_DOUBLE_EQ(step_triple(b, k).beta, step_triple(ref, k).beta);
    EXPECT_DOUBLE_EQ(step_triple(b, k).lambda, step_triple(ref, k).lambda);
  }
}

TEST(StepTriple, ArgumentValidation) {
  EXPECT_THROW(make_schedule(Policy::det_convex, 0.0, 8), std::invalid_argument);
  EXPECT_THROW(make_schedule(Policy::det_convex, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(make_schedule(Policy::det_nonconvex, 1.0, 8, 0.0, 0.0, 1.5),
               std::invalid_argument);
  EXPECT_THROW(make_schedule(Policy::sto_convex, 1.0, 8, 1.0, 0.0),
               std::invalid_argument);
  EXPECT_THROW(make_schedule(Policy::custom, 1.0, 8), std::invalid_argument);
  const StepSchedule s = make_schedule(Policy::det_convex, 1.0, 8);
  EXPECT_THROW(step_triple(s, 0), std::invalid_argument);
  StepSchedule empty;
  EXPECT_THROW(step_triple(empty, 1), std::invalid_argument);
}

TEST(PolicyNames, RoundTrip) {
  for (Policy p : {Policy::det_nonconvex, Policy::det_convex, Policy::sto_nonconvex,
                   Policy::sto_convex})
    EXPECT_EQ(policy_from_name(policy_name(p)), p);
  EXPECT_THROW(policy_from_name("unknown"), std::invalid_argument);
}

TEST(GammaTable, ClosedFormAndExamples) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 1000);
  const GammaTable gt = gamma_table(s, 1000);
  EXPECT_DOUBLE_EQ(gt.at(1), 1.0);
  EXPECT_NEAR(gt.at(2), 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(gt.at(3), 1.0 / 6.0, 1e-16);
  for (int k = 1; k <= 1000; ++k) {
    const double closed = 2.0 / (static_cast<double>(k) * (k + 1.0));
    EXPECT_NEAR(gt.at(k), closed, 1e-12 * closed) << "k=" << k;
  }
}

TEST(GammaTable, SuffixBoundAndTelescoping) {
  const StepSchedule s = make_schedule(Policy::det_convex, 1.0, 1000);
  const GammaTable gt = gamma_table(s, 1000);
  double telescoped = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    EXPECT_LE(gt.suffix_from(k), 2.0 / k * (1.0 + 1e-12)) << "k=" << k;
    telescoped += step_triple(s, k).alpha / gt.at(k);
    EXPECT_NEAR(telescoped, 1.0 / gt.at(k), 1e-12 / gt.at(k)) << "k=" << k;
  }
}

TEST(CCoeff, SingleStepExample) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 1, 0.0, 0.0, 1.0);
  EXPECT_NEAR(c_coeff(s, 1, 1), 0.3625, 1e-15);
}

TEST(CCoeff, LambdaEqualsBetaGivesHalf) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 4.0, 32, 0.0, 0.0, 0.0);
  const GammaTable gt = gamma_table(s, 32);
  for (int k = 1; k <= 32; ++k) EXPECT_DOUBLE_EQ(c_coeff(s, gt, k), 0.5);
}

TEST(CCoeff, FloorAcrossPolicyGrid) {
  for (double lc : {0.0, 0.5, 1.0}) {
    for (int n : {10, 100, 1000}) {
      const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, n, 0.0, 0.0, lc);
      const GammaTable gt = gamma_table(s, n);
      for (int k = 1; k <= n; ++k) {
        const double c = c_coeff(s, gt, k);
        EXPECT_GE(c, 11.0 / 32.0 - 1e-12) << "lc=" << lc << " n=" << n << " k=" << k;
        EXPECT_GE(step_triple(s, k).lambda * c, 1.0 / 6.0 - 1e-12)
            << "lc=" << lc << " n=" << n << " k=" << k;
      }
    }
  }
}

TEST(CCoeff, RangeValidation) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 4);
  const GammaTable gt = gamma_table(s, 4);
  EXPECT_THROW(c_coeff(s, gt, 0), std::invalid_argument);
  EXPECT_THROW(c_coeff(s, gt, 5), std::invalid_argument);
}

TEST(ValidateSchedule, DetNonconvexOk) {
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 3.0, 64);
  const ScheduleValidation v = validate_schedule(s, 64, ScheduleMode::nonconvex);
  EXPECT_TRUE(v.ok) << v.summary();
}

TEST(ValidateSchedule, DetConvexRatioIsConstant) {
  const double lips = 2.5;
  const StepSchedule s = make_schedule(Policy::det_convex, lips, 64);
  EXPECT_TRUE(validate_schedule(s, 64, ScheduleMode::convex_det).ok);
  const GammaTable gt = gamma_table(s, 64);
  for (int k = 1; k <= 64; ++k) {
    const StepTriple st = step_triple(s, k);
    EXPECT_NEAR(st.alpha / (st.lambda * gt.at(k)), 4.0 * lips, 4.0 * lips * 1e-12);
  }
}

TEST(ValidateSchedule, StoConvexOk) {
  const StepSchedule s = make_schedule(Policy::sto_convex, 1.0, 64, 1.0, 2.0);
  EXPECT_TRUE(validate_schedule(s, 64, ScheduleMode::convex_sto).ok);
}

TEST(ValidateSchedule, RejectsDecreasingLambdaInConvexMode) {
  StepSchedule s;
  s.policy = Policy::custom;
  s.lips = 1.0;
  s.horizon = 16;
  s.rule = [](int k) {
    return StepTriple{2.0 / (k + 1.0), 0.25, 0.25 / k};
  };
  const ScheduleValidation v = validate_schedule(s, 16, ScheduleMode::convex_det);
  EXPECT_FALSE(v.ok);
  bool found = false;
  for (const auto& c : v.checks)
    if (c.name == "ratio_alpha_over_lambda_gamma_nonincreasing" && !c.ok) {
      found = true;
      EXPECT_GE(c.first_bad_k, 2);
    }
  EXPECT_TRUE(found) << v.summary();
}

TEST(ValidateSchedule, RejectsOversizedStepsInNonconvexMode) {
  StepSchedule s;
  s.policy = Policy::custom;
  s.lips = 1.0;
  s.horizon = 8;
  s.rule = [](int k) {
    return StepTriple{2.0 / (k + 1.0), 10.0, 10.0};
  };
  const ScheduleValidation v = validate_schedule(s, 8, ScheduleMode::nonconvex);
  EXPECT_FALSE(v.ok);
  EXPECT_NE(v.summary().find("c_coeff_positive"), std::string::npos);
}

TEST(ValidateSchedule, RejectsAlphaOutsideUnitInterval) {
  StepSchedule s;
  s.policy = Policy::custom;
  s.lips = 1.0;
  s.horizon = 4;
  s.rule = [](int k) {
    return StepTriple{k == 1 ? 1.0 : 1.25, 0.5, 0.5};
  };
  const ScheduleValidation v = validate_schedule(s, 4, ScheduleMode::nonconvex);
  EXPECT_FALSE(v.ok);
  EXPECT_NE(v.summary().find("alpha_in_unit_interval"), std::string::npos);
}

TEST(ValidateSchedule, RejectsAlphaFirstNotOne) {
  StepSchedule s;
  s.policy = Policy::custom;
  s.lips = 1.0;
  s.horizon = 4;
  s.rule = [](int k) {
    return StepTriple{2.0 / (k + 2.0), 0.5, 0.5};
  };
  const ScheduleValidation v = validate_schedule(s, 4, ScheduleMode::nonconvex);
  EXPECT_FALSE(v.ok);
  EXPECT_NE(v.summary().find("alpha_first_is_one"), std::string::npos);
}

TEST(TerminationPmf, ConvexThreeStepExample) {
  const StepSchedule s = make_schedule(Policy::det_convex, 1.0, 3);
  const std::vector<double> p = termination_pmf(s, 3, PmfMode::convex);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0], 0.1, 1e-15);
  EXPECT_NEAR(p[1], 0.3, 1e-15);
  EXPECT_NEAR(p[2], 0.6, 1e-15);
}

TEST(TerminationPmf, NonconvexUniformWhenLambdaEqualsBeta) {
  // lambda = beta makes every weight lambda * (1 - L beta): uniform.
  const StepSchedule s = make_schedule(Policy::det_nonconvex, 1.0, 7, 0.0, 0.0, 0.0);
  const std::vector<double> p = termination_pmf(s, 7, PmfMode::nonconvex);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 7.0, 1e-15);
}

TEST(TerminationPmf, MatchesNonconvexWeightsDirectly) {
  const StepSchedule s =
      make_schedule(Policy::sto_nonconvex, 1.0, 16, 1.0, 1.0, 1.0);
  const GammaTable gt = gamma_table(s, 16);
  double total = 0.0;
  std::vector<double> w(16);
  for (int k = 1; k <= 16; ++k) {
    w[static_cast<size_t>(k) - 1] = step_triple(s, k).lambda * c_coeff(s, gt, k);
    total += w[static_cast<size_t>(k) - 1];
  }
  const std::vector<double> p = termination_pmf(s, 16, PmfMode::nonconvex);
  for (int k = 0; k < 16; ++k)
    EXPECT_NEAR(p[static_cast<size_t>(k)], w[static_cast<size_t>(k)] / total, 1e-15);
}

TEST(TerminationPmf, SumsToOne) {
  for (int n : {1, 2, 129}) {
    const StepSchedule nc = make_schedule(Policy::det_nonconvex, 2.0, n);
    const StepSchedule cv = make_schedule(Policy::det_convex, 2.0, n);
    double s1 = 0.0, s2 = 0.0;
    for (double v : termination_pmf(nc, n, PmfMode::nonconvex)) s1 += v;
    for (double v : termination_pmf(cv, n, PmfMode::convex)) s2 += v;
    EXPECT_NEAR(s1, 1.0, 1e-12);
    EXPECT_NEAR(s2, 1.0, 1e-12);
  }
}

TEST(TerminationPmf, RejectsNonpositiveWeights) {
  StepSchedule s;
  s.policy = Policy::custom;
  s.lips = 1.0;
  s.horizon = 4;
  s.rule = [](int k) {
    return StepTriple{2.0 / (k + 1.0), 2.0, 2.0};  // beta >= 1/L
  };
  EXPECT_THROW(termination_pmf(s, 4, PmfMode::convex), std::invalid_argument);
  EXPECT_THROW(termination_pmf(s, 4, PmfMode::nonconvex), std::invalid_argument);
}

TEST(MinibatchSize, HorizonDependentExample) {
  EXPECT_EQ(minibatch_size(BatchVariant::horizon_dependent, 2, 2.0, 1.0, 0.5, 1.0, 10),
            16);
}

TEST(MinibatchSize, HorizonDependentSmoothOnlyBranch) {
  // lips_f = 0 voids the k/lips_f branch.
  EXPECT_EQ(minibatch_size(BatchVariant::horizon_dependent, 2, 1.0, 1.0, 0.0, 1.0, 10),
            40);
}

TEST(MinibatchSize, HorizonFreeExample) {
  EXPECT_EQ(minibatch_size(BatchVariant::horizon_free, 5, 1.0, 2.0, 0.0, 1.0, 0), 3);
}

TEST(MinibatchSize, TinyNoiseGivesSingleSample) {
  EXPECT_EQ(minibatch_size(BatchVariant::horizon_free, 3, 1e-12, 1.0, 0.0, 1.0, 0), 1);
}

TEST(MinibatchSize, SumBoundedForPositiveLipsF) {
  // sum_k m_k <= N + sigma^2 N^2 / (lips_f * lips * d^2).
  const double sigma = 1.0, lips = 3.0, lips_f = 2.0, d = 1.0;
  const int n = 100;
  long long total = 0;
  for (int k = 1; k <= n; ++k)
    total += minibatch_size(BatchVariant::horizon_dependent, k, sigma, lips, lips_f, d, n);
  const double cap = n + sigma * sigma * n * n / (lips_f * lips * d * d);
  EXPECT_LE(static_cast<double>(total), cap);
}

TEST(MinibatchSize, Validation) {
  EXPECT_THROW(minibatch_size(BatchVariant::horizon_free, 0, 1.0, 1.0, 0.0, 1.0, 0),
               std::invalid_argument);
  EXPECT_THROW(minibatch_size(BatchVariant::horizon_free, 1, 0.0, 1.0, 0.0, 1.0, 0),
               std::invalid_argument);
  EXPECT_THROW(minibatch_size(BatchVariant::horizon_free, 1, 1.0, 1.0, 0.0, 0.0, 0),
               std::invalid_argument);
  EXPECT_THROW(minibatch_size(BatchVariant::fixed, 1, 1.0, 1.0, 0.0, 1.0, 0),
               std::invalid_argument);
  EXPECT_THROW(
      minibatch_size(BatchVariant::horizon_dependent, 1, 1.0, 1.0, 0.0, 1.0, 0),
      std::invalid_argument);
}

}  // namespace
}  // namespace uniag
