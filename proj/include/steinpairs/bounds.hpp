#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"

namespace steinpairs {

// Certified sup-norms of the first three partial derivatives.
struct HNorms {
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
};

// Column absolute sums of Lambda^{-1}.
inline Vector lambda_weights(const SquareMatrix& lambda) {
  return invert(lambda).cwiseAbs().colwise().sum().transpose();
}

struct BoundReport {
  Vector lambda_weights;
  Estimate A, B, C;
  HNorms h;
  double sigma_maxabs = 0.0;
  int d = 0;
  double total = 0.0;
  double total_se = 0.0;
  std::vector<std::string> provenance;

  double coefficient_A() const { return h.h2 / 4.0; }
  double coefficient_B() const { return h.h3 / 12.0; }
  double coefficient_C() const { return h.h1 + 0.5 * d * std::sqrt(sigma_maxabs) * h.h2; }

  // Recomputes the total from the stored fields.
  double recompute() const {
    return term(coefficient_A(), A.value) + term(coefficient_B(), B.value) + term(coefficient_C(), C.value);
  }

  // A vanishing term contributes nothing even when its coefficient is infinite.
  static double term(double coef, double value) { return value == 0.0 ? 0.0 : coef * value; }
};

// (|h|_2/4) A + (|h|_3/12) B + (|h|_1 + d ||Sigma||^{1/2} |h|_2 / 2) C.
inline BoundReport smooth_bound(const Estimate& A, const Estimate& B, const Estimate& C, HNorms h,
                                   const SymMatrix& sigma, int d) {
  if (A.value < 0 || B.value < 0 || C.value < 0) throw InvalidArgument("bound terms must be nonnegative");
  if (h.h1 < 0 || h.h2 < 0 || h.h3 < 0) throw InvalidArgument("derivative norms must be nonnegative");
  if (d < 1 || sigma.dim() != d) throw InvalidArgument("dimension does not match Sigma");
  BoundReport r;
  r.A = A;
  r.B = B;
  r.C = C;
  r.h = h;
  r.d = d;
  r.sigma_maxabs = norms(sigma.matrix()).maxabs;
  r.total = r.recompute();
  const double ea = BoundReport::term(r.coefficient_A(), A.std_error);
  const double eb = BoundReport::term(r.coefficient_B(), B.std_error);
  const double ec = BoundReport::term(r.coefficient_C(), C.std_error);
  r.total_se = std::sqrt(ea * ea + eb * eb + ec * ec);
  return r;
}

struct NonSmoothReport {
  double A_prime = 0, B_prime = 0, C_prime = 0, D_prime = 0, T_prime = 0;
  double a = 1.0;
  double gamma_d = 1.0;
  int d = 0;
  double total = 0.0;
  bool t_at_least_one = false;  // -D' log T' is then nonpositive; kept as is
  std::string caveat = "gamma(d) is not known explicitly; the reported value uses the user-set constant";
};

inline NonSmoothReport nonsmooth_bound(double A_prime, double B_prime, double C_prime, double a, int d,
                                         double gamma_d = 1.0) {
  if (A_prime < 0 || B_prime < 0 || C_prime < 0) throw InvalidArgument("A', B', C' must be nonnegative");
  if (!(a >= 1.0)) throw InvalidArgument("the constant a must be at least 1");
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!(gamma_d > 0)) throw InvalidArgument("gamma(d) must be positive");
  NonSmoothReport r;
  r.A_prime = A_prime;
  r.B_prime = B_prime;
  r.C_prime = C_prime;
  r.a = a;
  r.d = d;
  r.gamma_d = gamma_d;
  r.D_prime = A_prime / 2.0 + C_prime * d;
  const double root = r.D_prime + std::sqrt(a * B_prime / 2.0 + r.D_prime * r.D_prime);
  r.T_prime = root * root / (a * a);
  if (r.T_prime == 0.0) throw DegenerateBound("T' = 0 (A', B' and C' all vanish)");
  r.t_at_least_one = r.T_prime >= 1.0;
  const double st = std::sqrt(r.T_prime);
  const double log_term = r.D_prime == 0.0 ? 0.0 : -r.D_prime * std::log(r.T_prime);
  r.total = gamma_d * gamma_d * (log_term + B_prime / (2.0 * st) + C_prime + a * st);
  return r;
}

// The function of t minimized by T' (without the gamma^2 factor and C').
inline double nonsmooth_objective(double D, double B, double a, double t) {
  return D * std::log(1.0 / t) + 0.5 * B / std::sqrt(t) + a * std::sqrt(t);
}

// Constant a of the smoothing condition for indicators of convex sets.
inline double convex_set_a(int d) { return 2.0 * std::sqrt(static_cast<double>(d)); }

// 1/2 |h|_2 sum_ij |sigma_ij - sigma0_ij|.
inline double covariance_swap_bound(const SymMatrix& sigma, const SymMatrix& sigma0, double h2) {
  if (sigma.dim() != sigma0.dim()) throw InvalidArgument("covariance dimensions differ");
  if (h2 < 0) throw InvalidArgument("|h|_2 must be nonnegative");
  (void)inverse_sqrt(sigma);  // full rank, else SingularSigma
  require_psd(sigma0);
  return 0.5 * h2 * (sigma.matrix() - sigma0.matrix()).cwiseAbs().sum();
}

// One-dimensional bound (6/l) sqrt(v) + (6/sqrt l) sqrt(t) + (19/l) sqrt(r).
inline double univariate_rr_bound(double lambda, double var_cond_sq, double abs_third, double var_r) {
  if (!(lambda > 0)) throw InvalidArgument("lambda must be positive");
  if (var_cond_sq < 0 || abs_third < 0 || var_r < 0) throw InvalidArgument("moment inputs must be nonnegative");
  return 6.0 / lambda * std::sqrt(var_cond_sq) + 6.0 / std::sqrt(lambda) * std::sqrt(abs_third) +
         19.0 / lambda * std::sqrt(var_r);
}

// (a/g + 1)^{d-1} / g for lower-triangular Lambda with |off-diagonal| <= a and
// g = min |diagonal|; bounds max_i lambda^(i).
inline double triangular_weight_bound(const SquareMatrix& lambda, double a) {
  require_square(lambda, "Lambda");
  const int d = static_cast<int>(lambda.rows());
  if (a < 0) throw InvalidArgument("a must be nonnegative");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (lambda(i, j) != 0.0) throw NotTriangular("entry (" + std::to_string(i) + "," + std::to_string(j) + ") above the diagonal");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(lambda(i, j)) > a) throw InvalidArgument("off-diagonal entry exceeds a");
  const double g = lambda.diagonal().cwiseAbs().minCoeff();
  if (g == 0.0) throw ZeroDiagonal("Lambda has a zero diagonal entry");
  return std::pow(a / g + 1.0, d - 1) / g;
}

}  // namespace steinpairs
