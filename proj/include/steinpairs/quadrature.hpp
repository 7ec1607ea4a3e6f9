#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "steinpairs/errors.hpp"
#include "steinpairs/linalg.hpp"

namespace steinpairs {

struct Rule1D {
  Vector nodes;
  Vector weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights the
// squared first eigenvector components times the total mass.
inline Rule1D golub_welsch(const Vector& offdiag, double mass) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Matrix j = Matrix::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) j(k, k + 1) = j(k + 1, k) = offdiag(k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  Rule1D r;
  r.nodes = es.eigenvalues();
  r.weights = mass * es.eigenvectors().row(0).transpose().cwiseAbs2();
  return r;
}

}  // namespace detail

// E g(Z) for Z ~ N(0,1); exact for polynomials of degree < 2n.
inline Rule1D gauss_hermite(int n) {
  if (n < 1) throw InvalidArgument("rule needs at least one node");
  Vector off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  return detail::golub_welsch(off, 1.0);
}

// Integral over [lo, hi] with unit weight.
inline Rule1D gauss_legendre(int n, double lo = -1.0, double hi = 1.0) {
  if (n < 1) throw InvalidArgument("rule needs at least one node");
  Vector off(n - 1);
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Rule1D r = detail::golub_welsch(off, 2.0);
  const double half = 0.5 * (hi - lo);
  r.nodes = (r.nodes.array() * half + 0.5 * (hi + lo)).matrix();
  r.weights *= half;
  return r;
}

// Tensor-product Gauss-Hermite grid for N(0, Id_d): one node per column.
struct GaussGrid {
  Matrix nodes;  // d x m
  Vector weights;

  int size() const { return static_cast<int>(weights.size()); }
};

inline GaussGrid gauss_hermite_grid(int d, int n) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  const Rule1D r = gauss_hermite(n);
  long long m = 1;
  for (int k = 0; k < d; ++k) {
    m *= n;
    if (m > 4'000'000) throw InvalidArgument("quadrature grid too large");
  }
  GaussGrid g;
  g.nodes.resize(d, m);
  g.weights.resize(m);
  std::vector<int> idx(d, 0);
  for (long long c = 0; c < m; ++c) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      g.nodes(k, c) = r.nodes(idx[k]);
      w *= r.weights(idx[k]);
    }
    g.weights(c) = w;
    for (int k = 0; k < d && ++idx[k] == n; ++k) idx[k] = 0;
  }
  return g;
}

}  // namespace steinpairs
