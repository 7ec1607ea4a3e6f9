#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "steinpairs/bounds.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"

namespace steinpairs {

enum class Family { coordinate_map, polynomial_cutoff, trigonometric, smoothed_indicator, indicator };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::coordinate_map: return "coordinate_map";
    case Family::polynomial_cutoff: return "polynomial_cutoff";
    case Family::trigonometric: return "trigonometric";
    case Family::smoothed_indicator: return "smoothed_indicator";
    case Family::indicator: return "indicator";
  }
  return "?";
}

// A test function with certified sup-norms of its partial derivatives.
// `smoothed`, when set, evaluates E h(sqrt(s) Y + sqrt(1-s) x) in closed form.
struct TestFunction {
  std::string name;
  Family family = Family::coordinate_map;
  int dim = 0;
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  HNorms norms;
  std::function<double(double, const Vector&)> smoothed;

  double operator()(const Vector& x) const { return eval(x); }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline TestFunction coordinate(int d, int i) {
  TestFunction f;
  f.name = "x" + std::to_string(i + 1);
  f.family = Family::coordinate_map;
  f.dim = d;
  f.eval = [i](const Vector& x) { return x(i); };
  f.grad = [d, i](const Vector&) { return Vector(Vector::Unit(d, i)); };
  f.norms = {1.0, 0.0, 0.0};
  f.smoothed = [i](double s, const Vector& x) { return std::sqrt(1.0 - s) * x(i); };
  return f;
}

// Ridge x -> g(u'x) with |d^k g| <= gk; partials of order k are bounded by
// max|u_i|^k gk.
inline TestFunction ridge(std::string name, Family family, Vector u, double offset, std::function<double(double)> g,
                          std::function<double(double)> dg, std::array<double, 3> gnorm) {
  TestFunction f;
  f.name = std::move(name);
  f.family = family;
  f.dim = static_cast<int>(u.size());
  const double m = u.cwiseAbs().maxCoeff();
  f.norms = {m * gnorm[0], m * m * gnorm[1], m * m * m * gnorm[2]};
  f.eval = [u, offset, g](const Vector& x) { return g(u.dot(x) - offset); };
  f.grad = [u, offset, dg](const Vector& x) { return Vector(dg(u.dot(x) - offset) * u); };
  return f;
}

inline TestFunction sine(int d, int i) {
  auto f = ridge("sin(x" + std::to_string(i + 1) + ")", Family::trigonometric, Vector::Unit(d, i), 0.0,
                 [](double y) { return std::sin(y); }, [](double y) { return std::cos(y); }, {1.0, 1.0, 1.0});
  f.smoothed = [i](double s, const Vector& x) { return std::exp(-0.5 * s) * std::sin(std::sqrt(1.0 - s) * x(i)); };
  return f;
}

inline TestFunction cosine(int d, int i) {
  auto f = ridge("cos(x" + std::to_string(i + 1) + ")", Family::trigonometric, Vector::Unit(d, i), 0.0,
                 [](double y) { return std::cos(y); }, [](double y) { return -std::sin(y); }, {1.0, 1.0, 1.0});
  f.smoothed = [i](double s, const Vector& x) { return std::exp(-0.5 * s) * std::cos(std::sqrt(1.0 - s) * x(i)); };
  return f;
}

// x^3 / (1 + x^2): cubic near the origin, linear growth in the tails.
inline TestFunction clipped_cubic(int d, int i) {
  return ridge(
      "cubic(x" + std::to_string(i + 1) + ")", Family::polynomial_cutoff, Vector::Unit(d, i), 0.0,
      [](double y) { return y * y * y / (1.0 + y * y); },
      [](double y) {
        const double q = 1.0 + y * y;
        return y * y * (3.0 + y * y) / (q * q);
      },
      {9.0 / 8.0, 0.75 + std::numbers::sqrt2 / 2.0, 6.0});
}

// Phi((u'x - offset) / scale): a Gaussian-smoothed half-space indicator.
inline TestFunction smoothed_halfspace(Vector u, double offset, double scale) {
  if (!(scale > 0)) throw InvalidArgument("scale must be positive");
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::string name = "Phi(u'x";
  name += offset == 0.0 ? "" : (offset > 0 ? "-" : "+") + std::to_string(std::abs(offset)).substr(0, 4);
  name += ";" + std::to_string(scale).substr(0, 4) + ")";
  const double un = u.norm();
  auto f = ridge(
      name, Family::smoothed_indicator, u, offset, [scale](double y) { return normal_cdf(y / scale); },
      [scale](double y) { return normal_pdf(y / scale) / scale; },
      {c / scale, c * std::exp(-0.5) / (scale * scale), c / (scale * scale * scale)});
  f.smoothed = [u, offset, scale, un](double s, const Vector& x) {
    return normal_cdf((std::sqrt(1.0 - s) * u.dot(x) - offset) / std::sqrt(scale * scale + s * un * un));
  };
  return f;
}

// 1{u'x <= offset}; no finite derivative norms.
inline TestFunction halfspace_indicator(Vector u, double offset) {
  TestFunction f;
  f.name = "1{u'x<=b}";
  f.family = Family::indicator;
  f.dim = static_cast<int>(u.size());
  const double inf = std::numeric_limits<double>::infinity();
  f.norms = {inf, inf, inf};
  f.eval = [u, offset](const Vector& x) { return u.dot(x) <= offset ? 1.0 : 0.0; };
  f.grad = [d = f.dim](const Vector&) { return Vector(Vector::Zero(d)); };
  const double un = u.norm();
  f.smoothed = [u, offset, un](double s, const Vector& x) {
    if (s <= 0.0) return u.dot(x) <= offset ? 1.0 : 0.0;
    return normal_cdf((offset - std::sqrt(1.0 - s) * u.dot(x)) / (std::sqrt(s) * un));
  };
  return f;
}

inline TestFunction product_of(std::string name, const TestFunction& a, const TestFunction& b, HNorms norms,
                               std::function<double(double, const Vector&)> smoothed) {
  TestFunction f;
  f.name = std::move(name);
  f.family = Family::trigonometric;
  f.dim = a.dim;
  f.eval = [a, b](const Vector& x) { return a.eval(x) * b.eval(x); };
  f.grad = [a, b](const Vector& x) { return Vector(a.grad(x) * b.eval(x) + b.grad(x) * a.eval(x)); };
  f.norms = norms;
  f.smoothed = std::move(smoothed);
  return f;
}

// Twelve functions on R^d (d >= 2) using the first and last coordinates.
inline std::vector<TestFunction> battery(int d) {
  if (d < 2) throw InvalidArgument("the battery needs d >= 2");
  const int p = 0, q = d - 1;
  std::vector<TestFunction> out;
  out.push_back(coordinate(d, p));
  out.push_back(coordinate(d, q));
  out.push_back(sine(d, p));
  out.push_back(cosine(d, q));
  out.push_back(product_of("sin(x" + std::to_string(p + 1) + ")sin(x" + std::to_string(q + 1) + ")", sine(d, p),
                           sine(d, q), {1.0, 1.0, 1.0}, [p, q](double s, const Vector& x) {
                             const double r = std::sqrt(1.0 - s);
                             return std::exp(-s) * std::sin(r * x(p)) * std::sin(r * x(q));
                           }));
  out.push_back(product_of("cos(x" + std::to_string(p + 1) + ")cos(x" + std::to_string(q + 1) + ")", cosine(d, p),
                           cosine(d, q), {1.0, 1.0, 1.0}, [p, q](double s, const Vector& x) {
                             const double r = std::sqrt(1.0 - s);
                             return std::exp(-s) * std::cos(r * x(p)) * std::cos(r * x(q));
                           }));
  out.push_back(clipped_cubic(d, p));
  out.push_back(clipped_cubic(d, q));
  out.push_back(smoothed_halfspace(Vector::Unit(d, p), 0.0, 0.5));
  Vector diag = Vector::Zero(d);
  diag(p) = diag(q) = 1.0 / std::numbers::sqrt2;
  out.push_back(smoothed_halfspace(diag, 0.5, 1.0));
  Vector anti = Vector::Zero(d);
  anti(p) = 1.0 / std::numbers::sqrt2;
  anti(q) = -1.0 / std::numbers::sqrt2;
  out.push_back(smoothed_halfspace(anti, -0.3, 0.75));
  out.push_back(smoothed_halfspace(Vector::Unit(d, q), 1.0, 0.6));
  return out;
}

// Largest |partial| of orders 1..3 at x by central differences.
inline std::array<double, 3> numeric_partials_max(const TestFunction& f, const Vector& x, double step = 1e-3) {
  const int d = f.dim;
  auto at = [&](int i, int a, int j, int b, int k, int c) {
    Vector y = x;
    if (i >= 0) y(i) += a * step;
    if (j >= 0) y(j) += b * step;
    if (k >= 0) y(k) += c * step;
    return f.eval(y);
  };
  std::array<double, 3> m{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    m[0] = std::max(m[0], std::abs(at(i, 1, -1, 0, -1, 0) - at(i, -1, -1, 0, -1, 0)) / (2 * step));
    for (int j = 0; j < d; ++j) {
      const double h2 = (at(i, 1, j, 1, -1, 0) - at(i, 1, j, -1, -1, 0) - at(i, -1, j, 1, -1, 0) +
                         at(i, -1, j, -1, -1, 0)) /
                        (4 * step * step);
      m[1] = std::max(m[1], std::abs(h2));
      for (int k = 0; k < d; ++k) {
        double h3 = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1})
            for (int c : {-1, 1}) h3 += a * b * c * at(i, a, j, b, k, c);
        m[2] = std::max(m[2], std::abs(h3) / (8 * step * step * step));
      }
    }
  }
  return m;
}

// Worst excess of the sampled partials over the certified norms, at
// `points` draws from N(0, spread^2 Id).
inline double certification_excess(const TestFunction& f, int points, std::uint64_t seed, double spread = 2.0) {
  Rng rng = make_rng(seed, 0xce47);
  double worst = -std::numeric_limits<double>::infinity();
  Vector x(f.dim);
  for (int p = 0; p < points; ++p) {
    for (int i = 0; i < f.dim; ++i) x(i) = spread * standard_normal(rng);
    const auto m = numeric_partials_max(f, x);
    worst = std::max({worst, m[0] - f.norms.h1, m[1] - f.norms.h2, m[2] - f.norms.h3});
  }
  return worst;
}

}  // namespace steinpairs
