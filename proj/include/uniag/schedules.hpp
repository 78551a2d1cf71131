#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uniag {

struct StepTriple {
  double alpha = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
};

// Named stepsize policies. det_* are the deterministic aggressive policies
// (beta_k = 1/(2L)); sto_* shrink beta against the noise level. custom is
// any user-supplied rule (the recursion-based machinery below does not
// assume alpha_k = 2/(k+1)).
enum class Policy { det_nonconvex, det_convex, sto_nonconvex, sto_convex, custom };

inline std::string policy_name(Policy p) {
  switch (p) {
    case Policy::det_nonconvex: return "det_nonconvex";
    case Policy::det_convex: return "det_convex";
    case Policy::sto_nonconvex: return "sto_nonconvex";
    case Policy::sto_convex: return "sto_convex";
    case Policy::custom: return "custom";
  }
  return "custom";
}

inline Policy policy_from_name(const std::string& s) {
  if (s == "det_nonconvex") return Policy::det_nonconvex;
  if (s == "det_convex") return Policy::det_convex;
  if (s == "sto_nonconvex") return Policy::sto_nonconvex;
  if (s == "sto_convex") return Policy::sto_convex;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

struct StepSchedule {
  Policy policy = Policy::custom;
  double lips = 0.0;          // gradient modulus L the policy was built for
  double sigma = 0.0;
  double d_tilde = 0.0;
  int horizon = 0;            // N
  double lambda_choice = 1.0; // position in the admissible lambda interval
  std::function<StepTriple(int)> rule;
};

inline StepTriple step_triple(const StepSchedule& s, int k) {
  if (k < 1) throw std::invalid_argument("step_triple: k < 1");
  if (!s.rule) throw std::invalid_argument("step_triple: schedule has no rule");
  return s.rule(k);
}

// Builds one of the named policies. A stochastic policy with sigma = 0
// degenerates: its formulas divide by sigma, so it resolves to the
// deterministic counterpart (the returned schedule reflects that).
inline StepSchedule make_schedule(Policy policy, double lips, int horizon,
                                  double sigma = 0.0, double d_tilde = 0.0,
                                  double lambda_choice = 1.0) {
  if (!(lips > 0.0) || !std::isfinite(lips))
    throw std::invalid_argument("make_schedule: lips must be positive");
  if (horizon < 1) throw std::invalid_argument("make_schedule: horizon < 1");
  if (sigma < 0.0) throw std::invalid_argument("make_schedule: sigma < 0");
  if (lambda_choice < 0.0 || lambda_choice > 1.0)
    throw std::invalid_argument("make_schedule: lambda_choice outside [0,1]");
  if (policy == Policy::custom)
    throw std::invalid_argument("make_schedule: custom schedules are built directly");

  if (sigma == 0.0) {
    if (policy == Policy::sto_nonconvex) policy = Policy::det_nonconvex;
    if (policy == Policy::sto_convex) policy = Policy::det_convex;
  }

  StepSchedule s;
  s.policy = policy;
  s.lips = lips;
  s.sigma = sigma;
  s.d_tilde = d_tilde;
  s.horizon = horizon;
  s.lambda_choice = lambda_choice;

  const double n = static_cast<double>(horizon);
  switch (policy) {
    case Policy::det_nonconvex: {
      const double beta = 1.0 / (2.0 * lips);
      s.rule = [beta, lambda_choice](int k) {
        const double alpha = 2.0 / (k + 1.0);
        return StepTriple{alpha, beta, beta * (1.0 + lambda_choice * alpha / 4.0)};
      };
      break;
    }
    case Policy::det_convex: {
      const double beta = 1.0 / (2.0 * lips);
      s.rule = [beta](int k) {
        return StepTriple{2.0 / (k + 1.0), beta, k * beta / 2.0};
      };
      break;
    }
    case Policy::sto_nonconvex: {
      if (!(d_tilde > 0.0))
        throw std::invalid_argument("make_schedule: sto_nonconvex needs d_tilde > 0");
      const double beta =
          std::min(8.0 / (21.0 * lips), d_tilde / (sigma * std::sqrt(n)));
      s.rule = [beta, lambda_choice](int k) {
        const double alpha = 2.0 / (k + 1.0);
        return StepTriple{alpha, beta, beta * (1.0 + lambda_choice * alpha / 4.0)};
      };
      break;
    }
    case Policy::sto_convex: {
      if (!(d_tilde > 0.0))
        throw std::invalid_argument("make_schedule: sto_convex needs d_tilde > 0");
      const double beta =
          std::min(1.0 / (2.0 * lips),
                   std::pow(d_tilde * d_tilde / (lips * lips * sigma * sigma * n * n * n),
                            0.25));
      s.rule = [beta, lips](int k) {
        return StepTriple{2.0 / (k + 1.0), beta, k * lips * beta * beta / 2.0};
      };
      break;
    }
    case Policy::custom:
      break;
  }
  return s;
}

// Gamma_1 = 1, Gamma_k = (1 - alpha_k) Gamma_{k-1}; suffix[k-1] holds
// sum_{tau=k}^{N} Gamma_tau, accumulated backwards.
struct GammaTable {
  std::vector<double> gamma;
  std::vector<double> suffix;

  double at(int k) const { return gamma.at(static_cast<size_t>(k) - 1); }
  double suffix_from(int k) const { return suffix.at(static_cast<size_t>(k) - 1); }
  int horizon() const { return static_cast<int>(gamma.size()); }
};

inline GammaTable gamma_table(const StepSchedule& s, int horizon) {
  if (horizon < 1) throw std::invalid_argument("gamma_table: horizon < 1");
  GammaTable t;
  t.gamma.resize(static_cast<size_t>(horizon));
  t.gamma[0] = 1.0;
  for (int k = 2; k <= horizon; ++k)
    t.gamma[static_cast<size_t>(k) - 1] =
        (1.0 - step_triple(s, k).alpha) * t.gamma[static_cast<size_t>(k) - 2];
  t.suffix.resize(static_cast<size_t>(horizon));
  double acc = 0.0;
  for (int k = horizon; k >= 1; --k) {
    acc += t.gamma[static_cast<size_t>(k) - 1];
    t.suffix[static_cast<size_t>(k) - 1] = acc;
  }
  return t;
}

// C_k = 1 - L*lambda_k - L*(lambda_k - beta_k)^2 / (2*alpha_k*Gamma_k*lambda_k)
//       * sum_{tau=k}^{N} Gamma_tau.
// Positive C_k for every k <= N is the admissibility condition of the
// nonconvex stepsize analysis.
inline double c_coeff(const StepSchedule& s, const GammaTable& gt, int k) {
  if (k < 1 || k > gt.horizon())
    throw std::invalid_argument("c_coeff: k outside table horizon");
  const StepTriple st = step_triple(s, k);
  const double diff = st.lambda - st.beta;
  return 1.0 - s.lips * st.lambda -
         s.lips * diff * diff / (2.0 * st.alpha * gt.at(k) * st.lambda) *
             gt.suffix_from(k);
}

inline double c_coeff(const StepSchedule& s, int k, int horizon) {
  return c_coeff(s, gamma_table(s, horizon), k);
}

enum class ScheduleMode { nonconvex, convex_det, convex_sto };

inline std::string schedule_mode_name(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::nonconvex: return "nonconvex";
    case ScheduleMode::convex_det: return "convex_det";
    case ScheduleMode::convex_sto: return "convex_sto";
  }
  return "nonconvex";
}

struct ScheduleCheck {
  std::string name;
  bool ok = true;
  int first_bad_k = 0;
};

struct ScheduleValidation {
  bool ok = true;
  std::vector<ScheduleCheck> checks;

  std::string summary() const {
    std::string s;
    for (const auto& c : checks) {
      if (c.ok) continue;
      if (!s.empty()) s += "; ";
      s += c.name + " fails first at k=" + std::to_string(c.first_bad_k);
    }
    return s.empty() ? "ok" : s;
  }
};

// Checks the stepsize conditions required by the convergence analysis for
// the given mode. Tiny relative slack absorbs floating-point noise in
// conditions that hold with equality by construction.
inline ScheduleValidation validate_schedule(const StepSchedule& s, int horizon,
                                            ScheduleMode mode) {
  if (horizon < 1) throw std::invalid_argument("validate_schedule: horizon < 1");
  constexpr double kSlack = 1e-12;
  ScheduleValidation v;
  auto fail = [&](ScheduleCheck& c, int k) {
    if (c.ok) {
      c.ok = false;
      c.first_bad_k = k;
    }
  };

  ScheduleCheck first{"alpha_first_is_one"};
  ScheduleCheck range{"alpha_in_unit_interval"};
  ScheduleCheck pos{"steps_positive_finite"};
  for (int k = 1; k <= horizon; ++k) {
    const StepTriple st = step_triple(s, k);
    if (k == 1 && std::abs(st.alpha - 1.0) > kSlack) fail(first, k);
    if (k >= 2 && !(st.alpha > 0.0 && st.alpha < 1.0)) fail(range, k);
    if (!(st.beta > 0.0) || !(st.lambda > 0.0) || !std::isfinite(st.beta) ||
        !std::isfinite(st.lambda))
      fail(pos, k);
  }
  v.checks.push_back(first);
  v.checks.push_back(range);
  v.checks.push_back(pos);

  if (pos.ok && first.ok && range.ok) {
    const GammaTable gt = gamma_table(s, horizon);
    if (mode == ScheduleMode::nonconvex) {
      ScheduleCheck cpos{"c_coeff_positive"};
      for (int k = 1; k <= horizon; ++k)
        if (!(c_coeff(s, gt, k) > 0.0)) fail(cpos, k);
      v.checks.push_back(cpos);
    } else {
      ScheduleCheck pair{mode == ScheduleMode::convex_det
                             ? "alpha_lambda_le_beta"
                             : "alpha_lambda_le_lips_beta_sq"};
      ScheduleCheck cap{"beta_below_inverse_lips"};
      ScheduleCheck mono{"ratio_alpha_over_lambda_gamma_nonincreasing"};
      double prev_ratio = 0.0;
      for (int k = 1; k <= horizon; ++k) {
        const StepTriple st = step_triple(s, k);
        const double limit = mode == ScheduleMode::convex_det
                                 ? st.beta
                                 : s.lips * st.beta * st.beta;
        if (!(st.alpha * st.lambda <= limit * (1.0 + kSlack))) fail(pair, k);
        if (!(st.beta < 1.0 / s.lips)) fail(cap, k);
        const double ratio = st.alpha / (st.lambda * gt.at(k));
        if (k >= 2 && !(ratio <= prev_ratio * (1.0 + 1e-9))) fail(mono, k);
        prev_ratio = ratio;
      }
      v.checks.push_back(pair);
      v.checks.push_back(cap);
      v.checks.push_back(mono);
    }
  }

  for (const auto& c : v.checks) v.ok = v.ok && c.ok;
  return v;
}

enum class PmfMode { nonconvex, convex };

// Probability mass over termination indices 1..N. Nonconvex mode weights
// lambda_k * C_k; convex mode weights beta_k (1 - L beta_k) / Gamma_k.
inline std::vector<double> termination_pmf(const StepSchedule& s, int horizon,
                                           PmfMode mode) {
  if (horizon < 1) throw std::invalid_argument("termination_pmf: horizon < 1");
  const GammaTable gt = gamma_table(s, horizon);
  std::vector<double> w(static_cast<size_t>(horizon));
  for (int k = 1; k <= horizon; ++k) {
    const StepTriple st = step_triple(s, k);
    double wk;
    if (mode == PmfMode::nonconvex) {
      wk = st.lambda * c_coeff(s, gt, k);
    } else {
      wk = st.beta * (1.0 - s.lips * st.beta) / gt.at(k);
    }
    if (!(wk > 0.0))
      throw std::invalid_argument("termination_pmf: nonpositive weight at k=" +
                                  std::to_string(k));
    w[static_cast<size_t>(k) - 1] = wk;
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return w;
}

enum class BatchVariant { fixed, horizon_dependent, horizon_free };

inline std::string batch_variant_name(BatchVariant v) {
  switch (v) {
    case BatchVariant::fixed: return "fixed";
    case BatchVariant::horizon_dependent: return "horizon_dependent";
    case BatchVariant::horizon_free: return "horizon_free";
  }
  return "fixed";
}

// Mini-batch size for iteration k. horizon_dependent balances the batch
// against both the iteration count and the horizon (the k/lips_f branch is
// void when lips_f = 0); horizon_free needs no horizon and suits runs whose
// length is not fixed in advance.
inline long long minibatch_size(BatchVariant variant, int k, double sigma,
                                double lips, double lips_f, double d_tilde,
                                int horizon) {
  if (k < 1) throw std::invalid_argument("minibatch_size: k < 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("minibatch_size: sigma <= 0");
  if (!(d_tilde > 0.0)) throw std::invalid_argument("minibatch_size: d_tilde <= 0");
  if (!(lips > 0.0)) throw std::invalid_argument("minibatch_size: lips <= 0");
  if (lips_f < 0.0) throw std::invalid_argument("minibatch_size: lips_f < 0");
  const double kk = static_cast<double>(k);
  double arg;
  switch (variant) {
    case BatchVariant::fixed:
      throw std::invalid_argument("minibatch_size: fixed variant has no formula");
    case BatchVariant::horizon_dependent: {
      if (horizon < 1)
        throw std::invalid_argument("minibatch_size: horizon_dependent needs horizon");
      const double growth = kk * kk * static_cast<double>(horizon) / lips;
      arg = lips_f > 0.0 ? std::min(kk / lips_f, growth) : growth;
      break;
    }
    case BatchVariant::horizon_free:
      arg = kk;
      break;
  }
  const double m = std::ceil(sigma * sigma / (lips * d_tilde * d_tilde) * arg);
  return static_cast<long long>(m);
}

}  // namespace uniag
