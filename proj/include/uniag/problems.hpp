#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace uniag {

using Vector = Eigen::VectorXd;

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

// Smooth objective psi = f + h where h is convex and f may be nonconvex;
// lips_f and lips_h are the gradient Lipschitz moduli of the two parts,
// so lips() bounds the modulus of psi itself. psi_star / x_star carry the
// analytic optimum when the family knows it (used by bound verification).
struct SmoothProblem {
  std::string name;
  Eigen::Index dim = 0;
  std::function<Evaluation(const Vector&)> eval_impl;
  double lips_f = 0.0;
  double lips_h = 0.0;
  bool convex = false;
  std::optional<double> psi_star;
  std::optional<Vector> x_star;

  double lips() const { return lips_f + lips_h; }
};

struct LipschitzConstants {
  double lips_f = 0.0;
  double lips_h = 0.0;
  double lips_psi = 0.0;
};

inline LipschitzConstants lipschitz_constants(const SmoothProblem& p) {
  return {p.lips_f, p.lips_h, p.lips()};
}

inline Evaluation eval_smooth(const SmoothProblem& p, const Vector& x) {
  if (x.size() != p.dim)
    throw std::invalid_argument("eval_smooth: point has dimension " +
                                std::to_string(x.size()) + ", problem expects " +
                                std::to_string(p.dim));
  if (!x.allFinite())
    throw std::invalid_argument("eval_smooth: point has non-finite coordinates");
  return p.eval_impl(x);
}

namespace detail {

inline double sigmoid_value(double t) { return t * t / (1.0 + t * t); }

inline double sigmoid_deriv(double t) {
  const double d = 1.0 + t * t;
  return 2.0 * t / (d * d);
}

}  // namespace detail

// psi(x) = 1/2 x'Ax - b'x with diagonal A >= 0. Convex; optimum known
// whenever every zero diagonal entry has a zero linear term.
inline SmoothProblem make_quadratic(const Vector& diag, const Vector& b) {
  if (diag.size() < 1) throw std::invalid_argument("make_quadratic: empty diagonal");
  if (diag.size() != b.size())
    throw std::invalid_argument("make_quadratic: diag/b size mismatch");
  if ((diag.array() < 0.0).any())
    throw std::invalid_argument("make_quadratic: negative curvature entry");
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag[i] == 0.0 && b[i] != 0.0)
      throw std::invalid_argument("make_quadratic: unbounded along coordinate " +
                                  std::to_string(i));
  SmoothProblem p;
  p.name = "quadratic";
  p.dim = diag.size();
  p.lips_h = diag.maxCoeff();
  p.convex = true;
  Vector xs(diag.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    xs[i] = diag[i] > 0.0 ? b[i] / diag[i] : 0.0;
  p.x_star = xs;
  p.psi_star = 0.5 * xs.dot(diag.cwiseProduct(xs)) - b.dot(xs);
  p.eval_impl = [diag, b](const Vector& x) {
    Evaluation e;
    Vector ax = diag.cwiseProduct(x);
    e.value = 0.5 * x.dot(ax) - b.dot(x);
    e.gradient = ax - b;
    return e;
  };
  return p;
}

inline SmoothProblem make_quadratic(Eigen::Index dim, double diag = 1.0,
                                    double b = 0.0) {
  return make_quadratic(Vector::Constant(dim, diag), Vector::Constant(dim, b));
}

// Diagonal quadratic with eigenvalues geometrically spaced from 1 to cond,
// so the gradient modulus equals cond times the smallest eigenvalue.
inline SmoothProblem make_ill_conditioned_quadratic(double cond, Eigen::Index dim) {
  if (cond < 1.0)
    throw std::invalid_argument("make_ill_conditioned_quadratic: cond < 1");
  if (dim < 2)
    throw std::invalid_argument("make_ill_conditioned_quadratic: dim < 2");
  Vector diag(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    diag[i] = std::pow(cond, static_cast<double>(i) / static_cast<double>(dim - 1));
  SmoothProblem p = make_quadratic(diag, Vector::Zero(dim));
  p.name = "ill_conditioned_quadratic";
  return p;
}

// psi(x) = scale * sum_i t^2/(1+t^2) at t = x_i. Bounded, nonconvex,
// globally minimized at the origin; |d2/dt2| peaks at t = 0 with value 2.
inline SmoothProblem make_sigmoidal_sum(Eigen::Index dim, double scale = 1.0) {
  if (dim < 1) throw std::invalid_argument("make_sigmoidal_sum: dim < 1");
  if (scale <= 0.0) throw std::invalid_argument("make_sigmoidal_sum: scale <= 0");
  SmoothProblem p;
  p.name = "sigmoidal_sum";
  p.dim = dim;
  p.lips_f = 2.0 * scale;
  p.convex = false;
  p.psi_star = 0.0;
  p.x_star = Vector::Zero(dim);
  p.eval_impl = [scale, dim](const Vector& x) {
    Evaluation e;
    e.gradient.resize(dim);
    double v = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      v += detail::sigmoid_value(x[i]);
      e.gradient[i] = scale * detail::sigmoid_deriv(x[i]);
    }
    e.value = scale * v;
    return e;
  };
  return p;
}

// psi(x) = 1/2 x'Qx + a * sum_i sigmoid(x_i); both parts are minimized at
// the origin, so the global optimum stays analytic despite nonconvexity.
inline SmoothProblem make_quadratic_plus_sigmoidal(const Vector& q_diag, double a) {
  if (q_diag.size() < 1)
    throw std::invalid_argument("make_quadratic_plus_sigmoidal: empty diagonal");
  if ((q_diag.array() < 0.0).any())
    throw std::invalid_argument("make_quadratic_plus_sigmoidal: negative curvature");
  if (a <= 0.0)
    throw std::invalid_argument("make_quadratic_plus_sigmoidal: weight a <= 0");
  SmoothProblem p;
  p.name = "quadratic_plus_sigmoidal";
  p.dim = q_diag.size();
  p.lips_f = 2.0 * a;
  p.lips_h = q_diag.maxCoeff();
  p.convex = false;
  p.psi_star = 0.0;
  p.x_star = Vector::Zero(q_diag.size());
  p.eval_impl = [q_diag, a](const Vector& x) {
    Evaluation e;
    Vector qx = q_diag.cwiseProduct(x);
    e.value = 0.5 * x.dot(qx);
    e.gradient = qx;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      e.value += a * detail::sigmoid_value(x[i]);
      e.gradient[i] += a * detail::sigmoid_deriv(x[i]);
    }
    return e;
  };
  return p;
}

// Config-level description of a problem instance.
struct ProblemSpec {
  std::string family;
  Eigen::Index dim = 1;
  Vector diag;            // quadratic / quadratic_plus_sigmoidal; empty = ones
  Vector b;               // quadratic linear term; empty = zeros
  double cond = 10.0;     // ill_conditioned_quadratic
  double scale = 1.0;     // sigmoidal_sum
  double sigmoid_weight = 1.0;  // quadratic_plus_sigmoidal
};

inline SmoothProblem make_problem(const ProblemSpec& s) {
  if (s.dim < 1) throw std::invalid_argument("make_problem: dim < 1");
  const Vector diag = s.diag.size() ? s.diag : Vector::Ones(s.dim);
  const Vector b = s.b.size() ? s.b : Vector::Zero(s.dim);
  if (s.family == "quadratic") return make_quadratic(diag, b);
  if (s.family == "ill_conditioned_quadratic")
    return make_ill_conditioned_quadratic(s.cond, s.dim);
  if (s.family == "sigmoidal_sum") return make_sigmoidal_sum(s.dim, s.scale);
  if (s.family == "quadratic_plus_sigmoidal")
    return make_quadratic_plus_sigmoidal(diag, s.sigmoid_weight);
  throw std::invalid_argument("make_problem: unknown family '" + s.family + "'");
}

}  // namespace uniag
