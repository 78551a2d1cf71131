#pragma once

#include <cmath>
#include <stdexcept>

#include "uniag/problems.hpp"
#include "uniag/rng.hpp"

namespace uniag {

enum class NoiseModel { none, gaussian_isotropic };

// First-order stochastic oracle: unbiased gradient estimates with total
// second moment of the noise bounded by sigma^2. Gaussian noise is isotropic
// and scaled so E|noise|^2 = sigma^2 regardless of dimension.
struct StochasticOracle {
  SmoothProblem base;
  double sigma = 0.0;
  NoiseModel noise = NoiseModel::none;
};

inline StochasticOracle make_oracle(SmoothProblem base, double sigma,
                                    NoiseModel noise = NoiseModel::gaussian_isotropic) {
  if (sigma < 0.0) throw std::invalid_argument("make_oracle: sigma < 0");
  if (!std::isfinite(sigma)) throw std::invalid_argument("make_oracle: sigma not finite");
  StochasticOracle o;
  o.base = std::move(base);
  o.sigma = sigma;
  o.noise = sigma == 0.0 ? NoiseModel::none : noise;
  return o;
}

inline Vector sample_stochastic_gradient(const StochasticOracle& o, const Vector& x,
                                         Rng& rng) {
  Evaluation e = eval_smooth(o.base, x);
  if (o.noise == NoiseModel::none || o.sigma == 0.0) return e.gradient;
  const double per_coord = o.sigma / std::sqrt(static_cast<double>(o.base.dim));
  for (Eigen::Index i = 0; i < e.gradient.size(); ++i)
    e.gradient[i] += per_coord * rng.normal();
  return e.gradient;
}

}  // namespace uniag
