#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"
#include "steinpairs/quadrature.hpp"
#include "steinpairs/test_functions.hpp"

namespace steinpairs {

using Sampler = std::function<Vector(Rng&)>;

template <PairModel M>
Sampler sampler_of(const M& m) {
  return [&m](Rng& rng) { return Vector(m.statistic(m.sample(rng))); };
}

inline Sampler gaussian_sampler(const SymMatrix& sigma) {
  const Matrix root = psd_sqrt(sigma).matrix();
  return [root](Rng& rng) {
    Vector z(root.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
    return Vector(root * z);
  };
}

// Nodes per axis for Gaussian expectations; the tensor grid is capped by
// dimension so that it stays below ~10^5 points.
inline int default_gauss_nodes(int d) {
  switch (d) {
    case 1: return 64;
    case 2: return 40;
    case 3: return 24;
    case 4: return 14;
    default: return 0;
  }
}

// E h(Sigma^{1/2} Z) by tensor Gauss-Hermite quadrature.
inline double gaussian_expectation(const TestFunction& h, const SymMatrix& sigma, int nodes = 0) {
  const int d = sigma.dim();
  if (nodes <= 0) nodes = default_gauss_nodes(d);
  if (nodes <= 0) throw InvalidArgument("quadrature grid too large for d > 4; use Monte Carlo");
  const Matrix root = psd_sqrt(sigma).matrix();
  const GaussGrid g = gauss_hermite_grid(d, nodes);
  double acc = 0.0;
  for (int c = 0; c < g.size(); ++c) acc += g.weights(c) * h.eval(root * g.nodes.col(c));
  return acc;
}

struct DistanceOptions {
  // The Gaussian side is integrated by quadrature when d <= 4; otherwise, or
  // when forced, each W draw is paired with an independent Gaussian draw.
  bool force_paired_monte_carlo = false;
  Parallelism par;
};

// Eh(W) - Eh(Sigma^{1/2} Z).
inline Estimate distance_estimate(const Sampler& sample_w, const SymMatrix& sigma, const TestFunction& h,
                                  std::size_t n, std::uint64_t seed, DistanceOptions opt = {}) {
  const int d = sigma.dim();
  if (h.dim != d) throw InvalidArgument("test function dimension differs from Sigma");
  const bool quad = !opt.force_paired_monte_carlo && default_gauss_nodes(d) > 0;
  const double phi_h = quad ? gaussian_expectation(h, sigma) : 0.0;
  const Matrix root = psd_sqrt(sigma).matrix();
  const BatchMeans bm = monte_carlo(
      n, seed, 1,
      [&](Rng& rng, std::span<double> out) {
        const Vector w = sample_w(rng);
        double v = h.eval(w);
        if (!quad) {
          Vector z(d);
          for (int i = 0; i < d; ++i) z(i) = standard_normal(rng);
          v -= h.eval(root * z);
        }
        out[0] = v;
      },
      opt.par);
  Estimate e = bm.estimate(0);
  e.value -= phi_h;
  e.note = quad ? "Gaussian side by quadrature" : "paired Monte Carlo";
  return e;
}

template <PairModel M>
Estimate distance_estimate(const M& m, const SymMatrix& sigma, const TestFunction& h, std::size_t n,
                           std::uint64_t seed, DistanceOptions opt = {}) {
  return distance_estimate(sampler_of(m), sigma, h, n, seed, opt);
}

struct SteinQuadrature {
  int gauss_nodes = 0;  // per axis; 0 picks a dimension-dependent default
  int theta_nodes = 48;
};

// Solution of tr(Sigma D^2 f) - w' grad f = h - Eh(Sigma^{1/2} Z) through the
// Ornstein-Uhlenbeck semigroup,
//   f(w) = -int_0^{pi/2} [E h(cos(t) w + sin(t) Sigma^{1/2} Z) - Eh] tan(t) dt,
// which is the substitution e^{-u} = cos t in the usual time integral.
class SteinSolution {
 public:
  SteinSolution(TestFunction h, const SymMatrix& sigma, SteinQuadrature q = {})
      : h_(std::move(h)), sigma_(sigma), quad_(q) {
    (void)inverse_sqrt(sigma_);  // positive definite, else SingularSigma
    const int d = sigma_.dim();
    if (h_.dim != d) throw InvalidArgument("test function dimension differs from Sigma");
    if (quad_.gauss_nodes <= 0) quad_.gauss_nodes = std::max(default_gauss_nodes(d) * 3 / 5, 0);
    if (quad_.gauss_nodes <= 0) throw InvalidArgument("the Stein solver supports d <= 4");
    root_ = psd_sqrt(sigma_).matrix();
    const GaussGrid g = gauss_hermite_grid(d, quad_.gauss_nodes);
    shifted_ = root_ * g.nodes;
    gw_ = g.weights;
    theta_ = gauss_legendre(quad_.theta_nodes, 0.0, std::numbers::pi / 2);
    phi_h_ = 0.0;
    for (int c = 0; c < gw_.size(); ++c) phi_h_ += gw_(c) * h_.eval(shifted_.col(c));
  }

  const TestFunction& h() const { return h_; }
  const SymMatrix& sigma() const { return sigma_; }
  const SteinQuadrature& quadrature() const { return quad_; }
  double gaussian_mean() const { return phi_h_; }
  int dim() const { return sigma_.dim(); }

  double operator()(const Vector& w) const {
    double acc = 0.0;
    Vector y(w.size());
    for (int k = 0; k < theta_.size(); ++k) {
      const double t = theta_.nodes(k);
      const double c = std::cos(t), s = std::sin(t);
      double e = 0.0;
      for (int g = 0; g < gw_.size(); ++g) {
        y.noalias() = c * w + s * shifted_.col(g);
        e += gw_(g) * h_.eval(y);
      }
      acc += theta_.weights(k) * std::tan(t) * (e - phi_h_);
    }
    return -acc;
  }

 private:
  TestFunction h_;
  SymMatrix sigma_;
  SteinQuadrature quad_;
  Matrix root_, shifted_;
  Vector gw_;
  Rule1D theta_;
  double phi_h_ = 0.0;
};

inline SteinSolution stein_solve(const TestFunction& h, const SymMatrix& sigma, SteinQuadrature q = {}) {
  return SteinSolution(h, sigma, q);
}

// Central-difference gradient and Hessian of a scalar map.
struct LocalDerivatives {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

template <class F>
LocalDerivatives central_differences(const F& f, const Vector& x, double step) {
  const int d = static_cast<int>(x.size());
  LocalDerivatives out;
  out.value = f(x);
  out.grad.resize(d);
  out.hess.resize(d, d);
  Vector y = x;
  std::vector<double> plus(d), minus(d);
  for (int i = 0; i < d; ++i) {
    y(i) = x(i) + step;
    plus[i] = f(y);
    y(i) = x(i) - step;
    minus[i] = f(y);
    y(i) = x(i);
    out.grad(i) = (plus[i] - minus[i]) / (2 * step);
    out.hess(i, i) = (plus[i] - 2 * out.value + minus[i]) / (step * step);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double acc = 0.0;
      for (int a : {-1, 1})
        for (int b : {-1, 1}) {
          y(i) = x(i) + a * step;
          y(j) = x(j) + b * step;
          acc += a * b * f(y);
        }
      y(i) = x(i);
      y(j) = x(j);
      out.hess(i, j) = out.hess(j, i) = acc / (4 * step * step);
    }
  return out;
}

// tr(Sigma D^2 f)(w) - w' grad f(w) - h(w) + Eh at one point.
inline double stein_defect(const SteinSolution& sol, const Vector& w, double step = 1e-3) {
  const LocalDerivatives ld = central_differences(sol, w, step);
  const double lhs = (sol.sigma().matrix() * ld.hess).trace() - w.dot(ld.grad);
  return lhs - (sol.h().eval(w) - sol.gaussian_mean());
}

// RMS of the defect over the columns of `points`.
inline double stein_residual(const SteinSolution& sol, const Matrix& points, Parallelism par = {}) {
  if (points.rows() != sol.dim()) throw InvalidArgument("points must have one row per coordinate");
  if (!points.allFinite()) throw InvalidArgument("points must be finite");
  std::vector<double> sq(points.cols());
  parallel_for(
      sq.size(),
      [&](std::size_t c) {
        const double r = stein_defect(sol, points.col(static_cast<Eigen::Index>(c)));
        sq[c] = r * r;
      },
      par);
  double acc = 0.0;
  for (double v : sq) acc += v;
  return std::sqrt(acc / std::max<std::size_t>(sq.size(), 1));
}

// Worst sampled excess of |d f| over |h|_1 and of |d^2 f| over |h|_2 / 2.
inline std::array<double, 2> stein_derivative_excess(const SteinSolution& sol, const Matrix& points) {
  std::array<double, 2> worst{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const LocalDerivatives ld = central_differences(sol, points.col(c), 1e-3);
    worst[0] = std::max(worst[0], ld.grad.cwiseAbs().maxCoeff() - sol.h().norms.h1);
    worst[1] = std::max(worst[1], ld.hess.cwiseAbs().maxCoeff() - sol.h().norms.h2 / 2.0);
  }
  return worst;
}

// E[tr(Sigma D^2 f)(W) - W' grad f(W)] for W ~ N(0, Sigma).
inline Estimate characterization_check(const SteinSolution& sol, std::size_t n, std::uint64_t seed,
                                       Parallelism par = {}) {
  const Sampler draw = gaussian_sampler(sol.sigma());
  const BatchMeans bm = monte_carlo(
      n, seed, 1,
      [&](Rng& rng, std::span<double> out) {
        const Vector w = draw(rng);
        const LocalDerivatives ld = central_differences(sol, w, 1e-3);
        out[0] = (sol.sigma().matrix() * ld.hess).trace() - w.dot(ld.grad);
      },
      par);
  Estimate e = bm.estimate(0);
  e.note = "Stein characterization";
  return e;
}

// Standard normal draws for the points of a residual or derivative check.
inline Matrix sample_points(const SymMatrix& sigma, int count, std::uint64_t seed) {
  const Sampler draw = gaussian_sampler(sigma);
  Rng rng = make_rng(seed, 0x9017);
  Matrix pts(sigma.dim(), count);
  for (int c = 0; c < count; ++c) pts.col(c) = draw(rng);
  return pts;
}

// h_s(x) = E h(sqrt(s) Y + sqrt(1-s) x), Y ~ N(0, Id).
inline double smooth_h(const TestFunction& h, double s, const Vector& x, int nodes = 0) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("smoothing parameter must lie in (0, 1]");
  if (h.smoothed) return h.smoothed(s, x);
  const int d = static_cast<int>(x.size());
  if (nodes <= 0) nodes = default_gauss_nodes(d);
  if (nodes <= 0) throw InvalidArgument("no closed-form smoothing and d > 4");
  const GaussGrid g = gauss_hermite_grid(d, nodes);
  const double rs = std::sqrt(s), rx = std::sqrt(1.0 - s);
  double acc = 0.0;
  for (int c = 0; c < g.size(); ++c) acc += g.weights(c) * h.eval(rs * g.nodes.col(c) + rx * x);
  return acc;
}

// Psi_t(x) = -1/2 int_t^1 (h_s(x) - Phi h) / (1 - s) ds, the solution of the
// Stein equation (Sigma = Id) for h_t. On [t, 1/2] the integral runs in log s;
// on [1/2, 1] in v = sqrt(1 - s), which removes the endpoint singularity.
struct PsiQuadrature {
  int nodes = 96;
};

inline double psi_t(const TestFunction& h, double t, const Vector& x, PsiQuadrature q = {}) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("t must lie in (0, 1)");
  const double phi_h = smooth_h(h, 1.0, Vector::Zero(x.size()));
  auto g = [&](double s) { return smooth_h(h, s, x) - phi_h; };
  double integral = 0.0;
  if (t < 0.5) {
    const Rule1D r = gauss_legendre(q.nodes, std::log(t), std::log(0.5));
    for (int k = 0; k < r.size(); ++k) {
      const double s = std::exp(r.nodes(k));
      integral += r.weights(k) * g(s) * s / (1.0 - s);
    }
  }
  const Rule1D r = gauss_legendre(q.nodes, 0.0, std::sqrt(1.0 - std::max(t, 0.5)));
  for (int k = 0; k < r.size(); ++k) {
    const double v = r.nodes(k);
    integral += r.weights(k) * 2.0 * g(1.0 - v * v) / v;
  }
  return -0.5 * integral;
}

// max |d^2 Psi_t| over the columns of `points`, by central differences with a
// step proportional to sqrt(t).
inline double psi_t_second_norm(const TestFunction& h, double t, const Matrix& points, PsiQuadrature q = {}) {
  const double step = 0.02 * std::sqrt(t);
  double worst = 0.0;
  auto f = [&](const Vector& x) { return psi_t(h, t, x, q); };
  for (Eigen::Index c = 0; c < points.cols(); ++c)
    worst = std::max(worst, central_differences(f, points.col(c), step).hess.cwiseAbs().maxCoeff());
  return worst;
}

// Points along u at distances scaled to sqrt(t) plus a coarse global line.
inline Matrix psi_probe_points(const Vector& u, double offset, double t) {
  const Vector e = u / u.norm();
  const Vector base = e * (offset / u.norm());
  std::vector<double> r;
  for (int k = -120; k <= 120; ++k) r.push_back(std::sqrt(t) * k / 20.0);
  for (int k = -40; k <= 40; ++k) r.push_back(k / 10.0);
  Matrix pts(u.size(), static_cast<Eigen::Index>(r.size()));
  for (std::size_t k = 0; k < r.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = base + r[k] * e;
  return pts;
}

struct PsiGrowth {
  std::vector<double> t;
  std::vector<double> norm2;  // |Psi_t|_2 estimates
  std::vector<double> ratio;  // |Psi_t|_2 / log(1/t), normalized by the first entry

  // Every normalized ratio within [1/factor, factor].
  bool log_consistent(double factor = 2.0) const {
    return std::all_of(ratio.begin(), ratio.end(), [&](double r) { return r <= factor && r >= 1.0 / factor; });
  }
};

inline PsiGrowth psi_growth(const TestFunction& h, const Vector& u, double offset, const std::vector<double>& ts,
                            PsiQuadrature q = {}) {
  PsiGrowth g;
  for (double t : ts) {
    g.t.push_back(t);
    g.norm2.push_back(psi_t_second_norm(h, t, psi_probe_points(u, offset, t), q));
  }
  for (std::size_t k = 0; k < ts.size(); ++k)
    g.ratio.push_back((g.norm2[k] / std::log(1.0 / ts[k])) / (g.norm2[0] / std::log(1.0 / ts[0])));
  return g;
}

}  // namespace steinpairs
