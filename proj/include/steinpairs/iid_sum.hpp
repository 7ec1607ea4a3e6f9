#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "steinpairs/bounds.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"
#include "steinpairs/quadrature.hpp"

namespace steinpairs {

// Unit-variance centered laws; summands are these divided by sqrt(n).
struct SummandLaw {
  enum class Kind { two_point, bernoulli, uniform };
  Kind kind = Kind::two_point;
  double q = 0.5;  // success probability for the Bernoulli law

  static SummandLaw two_point() { return {Kind::two_point, 0.5}; }
  static SummandLaw bernoulli(double q) { return {Kind::bernoulli, q}; }
  static SummandLaw uniform() { return {Kind::uniform, 0.5}; }

  void validate() const {
    if (kind == Kind::bernoulli && !(q > 0.0 && q < 1.0)) throw InvalidArgument("Bernoulli q must lie in (0, 1)");
  }

  std::string name() const {
    switch (kind) {
      case Kind::two_point: return "two_point";
      case Kind::bernoulli: return "bernoulli(" + std::to_string(q).substr(0, 6) + ")";
      case Kind::uniform: return "uniform";
    }
    return "?";
  }

  // E|Y|^3 for the unit-variance law.
  double beta() const {
    switch (kind) {
      case Kind::two_point: return 1.0;
      case Kind::bernoulli: return (q * q + (1 - q) * (1 - q)) / std::sqrt(q * (1 - q));
      case Kind::uniform: return 3.0 * std::sqrt(3.0) / 4.0;
    }
    return 0.0;
  }

  // Var Y^2.
  double gamma() const {
    switch (kind) {
      case Kind::two_point: return 0.0;
      case Kind::bernoulli: return ((1 - q) * (1 - q) * (1 - q) + q * q * q) / (q * (1 - q)) - 1.0;
      case Kind::uniform: return 0.8;
    }
    return 0.0;
  }

  double draw(Rng& rng) const {
    switch (kind) {
      case Kind::two_point: return (rng() >> 63) ? 1.0 : -1.0;
      case Kind::bernoulli: return ((steinpairs::bernoulli(rng, q) ? 1.0 : 0.0) - q) / std::sqrt(q * (1 - q));
      case Kind::uniform: return std::sqrt(3.0) * (2.0 * uniform01(rng) - 1.0);
    }
    return 0.0;
  }
};

// E|Y|^3 and Var Y^2 by direct summation (discrete laws) or Gauss-Legendre
// quadrature of the density (uniform law).
struct LawMoments {
  double mean = 0, variance = 0, abs_third = 0, var_square = 0;
};

inline LawMoments numeric_moments(const SummandLaw& law) {
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  auto add = [&](double y, double w) {
    m1 += w * y;
    m2 += w * y * y;
    m3 += w * std::abs(y * y * y);
    m4 += w * y * y * y * y;
  };
  switch (law.kind) {
    case SummandLaw::Kind::two_point:
      add(1.0, 0.5);
      add(-1.0, 0.5);
      break;
    case SummandLaw::Kind::bernoulli: {
      const double s = std::sqrt(law.q * (1 - law.q));
      add((1 - law.q) / s, law.q);
      add(-law.q / s, 1 - law.q);
      break;
    }
    case SummandLaw::Kind::uniform: {
      const double r3 = std::sqrt(3.0);
      for (double side : {-1.0, 1.0}) {
        const Rule1D r = gauss_legendre(8, 0.0, r3);
        for (int k = 0; k < r.size(); ++k) add(side * r.nodes(k), r.weights(k) / (2 * r3));
      }
      break;
    }
  }
  return {m1, m2 - m1 * m1, m3, m4 - m2 * m2};
}

struct IidSumConfig {
  int d = 2;
  int n = 100;
  SummandLaw law;

  void validate() const {
    if (d < 1) throw InvalidArgument("d must be positive");
    if (n < 2) throw InvalidArgument("n must be at least 2");
    law.validate();
  }

  double beta() const { return law.beta(); }
  double gamma() const { return law.gamma(); }
};

// W_i = sum_j X_ij over a d x n array of i.i.d. summands with variance 1/n.
// One step replaces a uniformly chosen summand (I, J) by an independent copy.
class IidPairModel {
 public:
  using Config = Matrix;

  explicit IidPairModel(IidSumConfig cfg) : cfg_(cfg), scale_(1.0 / std::sqrt(static_cast<double>(cfg.n))) {
    cfg_.validate();
  }

  const IidSumConfig& config() const { return cfg_; }
  int dim() const { return cfg_.d; }

  Config sample(Rng& rng) const {
    Matrix x(cfg_.d, cfg_.n);
    for (int i = 0; i < cfg_.d; ++i)
      for (int j = 0; j < cfg_.n; ++j) x(i, j) = scale_ * cfg_.law.draw(rng);
    return x;
  }

  Config step(const Config& x, Rng& rng) const {
    Matrix out = x;
    const auto I = static_cast<Eigen::Index>(uniform_index(rng, cfg_.d));
    const auto J = static_cast<Eigen::Index>(uniform_index(rng, cfg_.n));
    out(I, J) = scale_ * cfg_.law.draw(rng);
    return out;
  }

  Vector statistic(const Config& x) const { return x.rowwise().sum(); }

  Vector drift(const Config& x) const { return -statistic(x) / (static_cast<double>(cfg_.d) * cfg_.n); }

  // Only diagonal entries survive: (1/(dn)) sum_J (1/n + X_iJ^2).
  Matrix fine_second_moment(const Config& x) const {
    const double dn = static_cast<double>(cfg_.d) * cfg_.n;
    Matrix m = Matrix::Zero(cfg_.d, cfg_.d);
    for (int i = 0; i < cfg_.d; ++i) m(i, i) = (1.0 + x.row(i).squaredNorm()) / dn;
    return m;
  }

  std::optional<Matrix> claimed_lambda() const {
    return Matrix(Matrix::Identity(cfg_.d, cfg_.d) / (static_cast<double>(cfg_.d) * cfg_.n));
  }
  std::optional<Matrix> claimed_sigma() const { return Matrix(Matrix::Identity(cfg_.d, cfg_.d)); }
  bool exchangeable() const { return true; }

 private:
  IidSumConfig cfg_;
  double scale_;
};

// Statistic-only sampler for distance runs; two-point sums use binomial counts.
inline Vector iid_sample_w(const IidSumConfig& cfg, Rng& rng) {
  Vector w(cfg.d);
  const double s = 1.0 / std::sqrt(static_cast<double>(cfg.n));
  if (cfg.law.kind == SummandLaw::Kind::two_point) {
    std::binomial_distribution<int> b(cfg.n, 0.5);
    for (int i = 0; i < cfg.d; ++i) w(i) = s * (2.0 * b(rng) - cfg.n);
    return w;
  }
  for (int i = 0; i < cfg.d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < cfg.n; ++j) acc += cfg.law.draw(rng);
    w(i) = s * acc;
  }
  return w;
}

// (d / sqrt n)(sqrt(gamma)/4 |h|_2 + 2 beta/3 |h|_3), assembled from
// Var E^W (dW_i)^2 <= gamma/(n^3 d^2), E|dW_i|^3 <= 8 beta/(d n^{3/2}) and
// lambda^(i) = dn.
inline BoundReport iid_bound(const IidSumConfig& cfg, HNorms h) {
  cfg.validate();
  const double d = cfg.d, n = cfg.n;
  const double var_cond = cfg.gamma() / (n * n * n * d * d);
  const double third = 8.0 * cfg.beta() / (d * std::pow(n, 1.5));
  const double weight = d * n;
  const Estimate A = Estimate::exact(d * weight * std::sqrt(var_cond));
  const Estimate B = Estimate::exact(d * weight * third);
  const Estimate C = Estimate::exact(0.0);
  BoundReport r = smooth_bound(A, B, C, h, SymMatrix(Matrix::Identity(cfg.d, cfg.d)), cfg.d);
  r.lambda_weights = Vector::Constant(cfg.d, weight);
  r.provenance.push_back("law " + cfg.law.name() + ": beta = " + std::to_string(cfg.beta()) +
                         ", gamma = " + std::to_string(cfg.gamma()));
  r.provenance.push_back("Var E^W (dW_i)^2 <= " + std::to_string(var_cond));
  r.provenance.push_back("E|dW_i|^3 <= " + std::to_string(third));
  return r;
}

// The closed form of the same bound.
inline double iid_bound_formula(const IidSumConfig& cfg, HNorms h) {
  return cfg.d / std::sqrt(static_cast<double>(cfg.n)) *
         (std::sqrt(cfg.gamma()) / 4.0 * h.h2 + 2.0 * cfg.beta() / 3.0 * h.h3);
}

}  // namespace steinpairs
