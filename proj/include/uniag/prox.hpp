#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "uniag/problems.hpp"

namespace uniag {

// Value on the extended real line. Keeps infinity explicit instead of
// threading sentinel floats through arithmetic.
struct ExtendedReal {
  double value = 0.0;
  bool finite = true;

  static ExtendedReal infinity() { return {0.0, false}; }
  static ExtendedReal of(double v) { return {v, true}; }

  bool operator==(const ExtendedReal& o) const {
    return finite == o.finite && (!finite || value == o.value);
  }
};

enum class TermKind { zero, box, box_l1 };

// Simple convex term X in a composite objective psi + X. Supported kinds:
// identically zero, a box indicator, and a box indicator plus a weighted
// l1 norm. Box kinds have a bounded domain, which several composite bounds
// require.
struct CompositeTerm {
  TermKind kind = TermKind::zero;
  Eigen::Index dim = 0;  // 0 for the zero term: any dimension is accepted
  Vector lo, hi;
  double l1_weight = 0.0;
};

inline CompositeTerm make_zero_term() { return {}; }

inline CompositeTerm make_box_term(const Vector& lo, const Vector& hi) {
  if (lo.size() < 1 || lo.size() != hi.size())
    throw std::invalid_argument("make_box_term: bad bound sizes");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i]))
      throw std::invalid_argument("make_box_term: empty box at coordinate " +
                                  std::to_string(i));
  CompositeTerm t;
  t.kind = TermKind::box;
  t.dim = lo.size();
  t.lo = lo;
  t.hi = hi;
  return t;
}

inline CompositeTerm make_box_term(Eigen::Index dim, double lo, double hi) {
  return make_box_term(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

inline CompositeTerm make_box_l1_term(const Vector& lo, const Vector& hi,
                                      double weight) {
  if (weight < 0.0) throw std::invalid_argument("make_box_l1_term: weight < 0");
  CompositeTerm t = make_box_term(lo, hi);
  t.kind = TermKind::box_l1;
  t.l1_weight = weight;
  return t;
}

inline CompositeTerm make_box_l1_term(Eigen::Index dim, double lo, double hi,
                                      double weight) {
  return make_box_l1_term(Vector::Constant(dim, lo), Vector::Constant(dim, hi),
                          weight);
}

namespace detail {

inline void check_prox_args(const CompositeTerm& t, const Vector& x, const Vector& y,
                            double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::invalid_argument("prox_map: stepsize c must be positive and finite");
  if (x.size() != y.size())
    throw std::invalid_argument("prox_map: point/gradient size mismatch");
  if (t.kind != TermKind::zero && x.size() != t.dim)
    throw std::invalid_argument("prox_map: point does not match term dimension");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("prox_map: non-finite input");
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace detail

// argmin_u { <y,u> + |u - x|^2 / (2c) + X(u) }, evaluated in closed form.
inline Vector prox_map(const CompositeTerm& t, const Vector& x, const Vector& y,
                       double c) {
  detail::check_prox_args(t, x, y, c);
  Vector u = x - c * y;
  switch (t.kind) {
    case TermKind::zero:
      return u;
    case TermKind::box:
      return u.cwiseMax(t.lo).cwiseMin(t.hi);
    case TermKind::box_l1: {
      for (Eigen::Index i = 0; i < u.size(); ++i)
        u[i] = detail::soft_threshold(u[i], c * t.l1_weight);
      return u.cwiseMax(t.lo).cwiseMin(t.hi);
    }
  }
  throw std::logic_error("prox_map: unreachable");
}

struct GradientMapping {
  Vector value;       // (x - prox_point) / c
  Vector prox_point;  // prox_map(t, x, y, c)
  double c = 0.0;
};

// Projected-gradient residual; reduces to y itself when X = 0 and c cancels.
inline GradientMapping gradient_mapping(const CompositeTerm& t, const Vector& x,
                                        const Vector& y, double c) {
  GradientMapping g;
  g.prox_point = prox_map(t, x, y, c);
  g.value = (x - g.prox_point) / c;
  g.c = c;
  return g;
}

inline ExtendedReal composite_value(const CompositeTerm& t, const Vector& x) {
  if (t.kind == TermKind::zero) return ExtendedReal::of(0.0);
  if (x.size() != t.dim)
    throw std::invalid_argument("composite_value: dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < t.lo[i] || x[i] > t.hi[i]) return ExtendedReal::infinity();
  if (t.kind == TermKind::box) return ExtendedReal::of(0.0);
  return ExtendedReal::of(t.l1_weight * x.lpNorm<1>());
}

// A point whose gradient mapping has norm eps is within eps*(c*L + 1) of
// satisfying the stationarity inclusion of the composite problem.
inline double stationarity_radius(double eps, double c, double lips) {
  if (eps < 0.0 || c <= 0.0 || lips < 0.0)
    throw std::invalid_argument("stationarity_radius: bad arguments");
  return eps * (c * lips + 1.0);
}

// Largest Euclidean norm over the term's domain; empty for the zero term
// whose domain is unbounded.
inline std::optional<double> domain_radius(const CompositeTerm& t) {
  if (t.kind == TermKind::zero) return std::nullopt;
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.dim; ++i)
    s += std::max(t.lo[i] * t.lo[i], t.hi[i] * t.hi[i]);
  return std::sqrt(s);
}

}  // namespace uniag
