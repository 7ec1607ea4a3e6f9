#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"

namespace steinpairs {

struct LinearityOptions {
  int inner = 64;          // inner steps per configuration without exact drift
  bool force_inner = false;
  Parallelism par{};
};

// Least-squares fit of -E[W' - W | omega] = Lambda W - R.
struct LinearityFit {
  Matrix lambda_hat;
  Vector r_mean;
  Vector r_var;            // residual variance per coordinate (1/n normalization)
  std::size_t n_samples = 0;
  Matrix standard_errors;  // same shape as lambda_hat
  Vector inner_noise_var;  // mean variance of the inner drift estimate; zero with exact drift
  bool exact_drift = true;
  std::optional<Matrix> claimed;
  std::optional<double> claim_deviation;  // max |lambda_hat - claimed|

  int dim() const { return static_cast<int>(lambda_hat.rows()); }

  // Every entry within k standard errors (plus floor) of the claimed Lambda.
  bool matches_claim(double k, double floor = 1e-12) const {
    if (!claimed) return false;
    const Matrix dev = (lambda_hat - *claimed).cwiseAbs();
    return (dev.array() <= k * standard_errors.array() + floor).all();
  }
};

namespace detail {

inline void require_design(const Matrix& gram, std::size_t n) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const Vector ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || ev.minCoeff() <= 1e-12 * top)
    throw DegenerateDesign("Gram matrix of the sampled W is numerically singular (n = " + std::to_string(n) + ")");
}

}  // namespace detail

template <PairModel M>
LinearityFit estimate_linearity(const M& m, std::size_t n, std::uint64_t seed, LinearityOptions opt = {}) {
  const int d = m.dim();
  if (n < static_cast<std::size_t>(d + 1)) throw InvalidArgument("estimate_linearity needs n >= d + 1");
  const bool exact = has_exact_drift<M>() && !opt.force_inner;
  if (!exact && opt.inner < 2) throw InvalidArgument("inner sample size must be at least 2");

  const RowTable rows = collect_rows(
      n, seed, 3 * d,
      [&](Rng& rng, double* out) {
        const auto c = m.sample(rng);
        const Vector w = m.statistic(c);
        Vector drift, noise = Vector::Zero(d);
        if constexpr (has_exact_drift<M>()) {
          if (exact) drift = drift_at(m, c);
        }
        if (!exact) std::tie(drift, noise) = drift_mc(m, c, rng, opt.inner);
        for (int i = 0; i < d; ++i) {
          out[i] = w(i);
          out[d + i] = drift(i);
          out[2 * d + i] = noise(i);
        }
      },
      opt.par);

  const Matrix w = rows.leftCols(d);
  const Matrix y = -rows.middleCols(d, d);  // -drift
  const Matrix gram = w.transpose() * w;
  detail::require_design(gram, n);
  const Matrix gram_inv = gram.inverse();
  const Matrix beta = gram_inv * (w.transpose() * y);  // d x d, column i fits coordinate i

  LinearityFit fit;
  fit.n_samples = n;
  fit.exact_drift = exact;
  fit.lambda_hat = beta.transpose();
  const Matrix resid = w * beta - y;  // R = Lambda W + drift
  fit.r_mean = resid.colwise().mean().transpose();
  fit.r_var = (resid.rowwise() - fit.r_mean.transpose()).cwiseAbs2().colwise().mean().transpose();
  fit.inner_noise_var = rows.rightCols(d).colwise().mean().transpose();

  const double dof = static_cast<double>(n) - d;
  fit.standard_errors = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double s2 = resid.col(i).squaredNorm() / dof;
    for (int k = 0; k < d; ++k) fit.standard_errors(i, k) = std::sqrt(s2 * gram_inv(k, k));
  }
  fit.claimed = claimed_lambda(m);
  if (fit.claimed) fit.claim_deviation = (fit.lambda_hat - *fit.claimed).cwiseAbs().maxCoeff();
  return fit;
}

// Remainder variances with the small-sample factor n/(n-d); the inner
// Monte Carlo noise is removed when the drift was estimated.
inline Vector var_R(const LinearityFit& fit) {
  const double n = static_cast<double>(fit.n_samples);
  const double d = fit.dim();
  return (fit.r_var * (n / (n - d)) - fit.inner_noise_var).cwiseMax(0.0);
}

// Mean of F(W', W) = 1/2 (W' - W)^t Lambda^{-t} (grad g(W') + grad g(W)).
template <PairModel M, class Grad>
Estimate check_antisymmetry(const M& m, Grad&& grad_g, const SquareMatrix& lambda, std::size_t n,
                            std::uint64_t seed, Parallelism par = {}) {
  const Matrix linv = invert(lambda);
  const BatchMeans bm = monte_carlo(
      n, seed, 1,
      [&](Rng& rng, std::span<double> out) {
        const auto c = m.sample(rng);
        const Vector w = m.statistic(c);
        const Vector w2 = m.statistic(m.step(c, rng));
        const Vector g = Vector(grad_g(w2)) + Vector(grad_g(w));
        out[0] = 0.5 * (linv * (w2 - w)).dot(g);
      },
      par);
  Estimate e = bm.estimate(0);
  e.note = "antisymmetry";
  return e;
}

struct StepCovariance {
  Matrix empirical;                // E (W' - W)(W' - W)^t, symmetrized
  Matrix std_error;
  Matrix exchangeable_prediction;  // 2 Sigma Lambda^t - 2 E(W R^t)
  Matrix equal_dist_prediction;    // Lambda Sigma + Sigma Lambda^t
  Matrix w_r;                      // E(W R^t); zero when the drift is not exact
  bool exchangeable = true;

  // Largest |empirical - target| / SE (floor guards zero SE entries).
  double max_z(const Matrix& target, double floor = 1e-12) const {
    double z = 0.0;
    for (int i = 0; i < empirical.rows(); ++i)
      for (int j = 0; j < empirical.cols(); ++j)
        z = std::max(z, std::abs(empirical(i, j) - target(i, j)) / std::max(std_error(i, j), floor));
    return z;
  }
};

template <PairModel M>
StepCovariance step_covariance(const M& m, const SquareMatrix& lambda, const SymMatrix& sigma, std::size_t n,
                               std::uint64_t seed, Parallelism par = {}) {
  const int d = m.dim();
  require_square(lambda, "Lambda");
  if (lambda.rows() != d || sigma.dim() != d) throw InvalidArgument("Lambda and Sigma must match the model dimension");
  const BatchMeans bm = monte_carlo(
      n, seed, 2 * d * d,
      [&](Rng& rng, std::span<double> out) {
        const auto c = m.sample(rng);
        const Vector w = m.statistic(c);
        const Vector dw = Vector(m.statistic(m.step(c, rng))) - w;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) out[i * d + j] = dw(i) * dw(j);
        if constexpr (has_exact_drift<M>()) {
          const Vector r = drift_at(m, c) + lambda * w;
          for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out[d * d + i * d + j] = w(i) * r(j);
        }
      },
      par);
  const Vector mean = bm.overall(), se = bm.std_error();
  StepCovariance sc;
  sc.empirical = Matrix::Zero(d, d);
  sc.std_error = Matrix::Zero(d, d);
  sc.w_r = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      sc.empirical(i, j) = 0.5 * (mean(i * d + j) + mean(j * d + i));
      sc.std_error(i, j) = se(i * d + j);
      sc.w_r(i, j) = mean(d * d + i * d + j);
    }
  const Matrix& s = sigma.matrix();
  sc.equal_dist_prediction = lambda * s + s * lambda.transpose();
  sc.exchangeable = is_exchangeable(m);
  // Without exchangeability only the equal-distribution identity applies.
  sc.exchangeable_prediction =
      sc.exchangeable ? Matrix(2.0 * s * lambda.transpose() - 2.0 * sc.w_r) : sc.equal_dist_prediction;
  return sc;
}

// 1/2 (Lambda Sigma Lambda^{-t} + Sigma), symmetrized.
inline SymMatrix sigma_tilde(const SquareMatrix& lambda, const SymMatrix& sigma) {
  require_square(lambda, "Lambda");
  const Matrix linv = invert(lambda);
  const Matrix t = 0.5 * (lambda * sigma.matrix() * linv.transpose() + sigma.matrix());
  return SymMatrix(0.5 * (t + t.transpose()), std::numeric_limits<double>::infinity());
}

struct EmbeddingSplit {
  int l = 0;
  Matrix lambda_11, lambda_12, lambda_21, lambda_22;
  Vector r_variance;              // per leading coordinate
  double r_variance_estimate = 0; // sum over leading coordinates
  std::size_t neighbours = 0;     // k of the k-NN regression (0 when skipped)
  std::string estimator;
};

namespace detail {

// k-NN regression of `tail` on `lead` evaluated at every sample.
inline Matrix knn_fit(const Matrix& lead, const Matrix& tail, std::size_t k) {
  const Eigen::Index n = lead.rows();
  Matrix fitted(n, tail.cols());
  if (lead.cols() == 1) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lead(a, 0) < lead(b, 0); });
    Matrix prefix = Matrix::Zero(n + 1, tail.cols());
    for (Eigen::Index r = 0; r < n; ++r) prefix.row(r + 1) = prefix.row(r) + tail.row(order[r]);
    for (Eigen::Index pos = 0; pos < n; ++pos) {
      const double x = lead(order[pos], 0);
      Eigen::Index lo = pos, hi = pos;
      while (static_cast<std::size_t>(hi - lo + 1) < k) {
        const bool can_lo = lo > 0, can_hi = hi + 1 < n;
        if (can_lo && (!can_hi || x - lead(order[lo - 1], 0) <= lead(order[hi + 1], 0) - x))
          --lo;
        else
          ++hi;
      }
      fitted.row(order[pos]) = (prefix.row(hi + 1) - prefix.row(lo)) / static_cast<double>(hi - lo + 1);
    }
    return fitted;
  }
  std::vector<std::pair<double, Eigen::Index>> dist(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) dist[j] = {(lead.row(i) - lead.row(j)).squaredNorm(), j};
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    Vector acc = Vector::Zero(tail.cols());
    for (std::size_t r = 0; r < k; ++r) acc += tail.row(dist[r].second).transpose();
    fitted.row(i) = acc.transpose() / static_cast<double>(k);
  }
  return fitted;
}

}  // namespace detail

// Block split of Lambda at l and the variance of R = -Lambda_12 E[tail | lead],
// the conditional mean estimated by k-nearest-neighbour averaging.
template <PairModel M>
EmbeddingSplit embed_split(const SquareMatrix& lambda, int l, const M& m, std::size_t n, std::uint64_t seed,
                           Parallelism par = {}) {
  require_square(lambda, "Lambda");
  const int d = static_cast<int>(lambda.rows());
  if (l < 1 || l >= d) throw InvalidArgument("split index must satisfy 1 <= l < d");
  if (m.dim() != d) throw InvalidArgument("Lambda and model dimensions differ");
  EmbeddingSplit s;
  s.l = l;
  s.lambda_11 = lambda.topLeftCorner(l, l);
  s.lambda_12 = lambda.topRightCorner(l, d - l);
  s.lambda_21 = lambda.bottomLeftCorner(d - l, l);
  s.lambda_22 = lambda.bottomRightCorner(d - l, d - l);
  s.r_variance = Vector::Zero(l);
  if ((s.lambda_12.array() == 0.0).all()) {
    s.estimator = "none (Lambda_12 = 0)";
    return s;
  }
  if (n < 2) throw InvalidArgument("embed_split needs at least two samples");
  const RowTable rows = collect_rows(
      n, seed, d,
      [&](Rng& rng, double* out) {
        const Vector w = m.statistic(m.sample(rng));
        for (int i = 0; i < d; ++i) out[i] = w(i);
      },
      par);
  const Matrix all = rows;
  s.neighbours = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const Matrix cond = detail::knn_fit(all.leftCols(l), all.rightCols(d - l), s.neighbours);
  const Matrix r = -(cond * s.lambda_12.transpose());
  const Vector mu = r.colwise().mean().transpose();
  s.r_variance = (r.rowwise() - mu.transpose()).cwiseAbs2().colwise().sum().transpose() / static_cast<double>(n - 1);
  s.r_variance_estimate = s.r_variance.sum();
  s.estimator = "k-nearest-neighbour conditional mean, k = ceil(sqrt(n))";
  return s;
}

struct SwapMoment {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;

  double z() const { return std_error > 0 ? std::abs(mean) / std_error : (mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()); }
};

struct SwapTest {
  std::vector<SwapMoment> moments;

  double max_z() const {
    double z = 0.0;
    for (const auto& m : moments) z = std::max(z, m.z());
    return z;
  }
  // True when every swap moment is within k standard errors of zero.
  bool passes(double k = 4.0) const { return max_z() <= k; }
};

// Compares moments of (W, W') with those of (W', W) up to order two:
// E(W'_i - W_i), E(W'_i W'_j - W_i W_j) and E(W_i W'_j - W'_i W_j).
template <PairModel M>
SwapTest moment_swap_test(const M& m, std::size_t n, std::uint64_t seed, Parallelism par = {}) {
  const int d = m.dim();
  std::vector<std::string> names;
  for (int i = 0; i < d; ++i) names.push_back("first[" + std::to_string(i) + "]");
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) names.push_back("second[" + std::to_string(i) + "," + std::to_string(j) + "]");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) names.push_back("cross[" + std::to_string(i) + "," + std::to_string(j) + "]");
  const int width = static_cast<int>(names.size());
  const BatchMeans bm = monte_carlo(
      n, seed, width,
      [&](Rng& rng, std::span<double> out) {
        const auto c = m.sample(rng);
        const Vector w = m.statistic(c);
        const Vector w2 = m.statistic(m.step(c, rng));
        int k = 0;
        for (int i = 0; i < d; ++i) out[k++] = w2(i) - w(i);
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j) out[k++] = w2(i) * w2(j) - w(i) * w(j);
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j) out[k++] = w(i) * w2(j) - w2(i) * w(j);
      },
      par);
  const Vector mean = bm.overall(), se = bm.std_error();
  SwapTest t;
  for (int k = 0; k < width; ++k) t.moments.push_back({names[k], mean(k), se(k)});
  return t;
}

}  // namespace steinpairs
