#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"

namespace steinpairs {

using Spins = std::vector<int>;  // entries +-1

struct SpinChainConfig {
  int d = 4;
  int n = 50;  // number of summed equilibrium vectors
  // Extra steps from the uniform start; the uniform law is already stationary,
  // so this only matters for stationarity diagnostics.
  long burn_in = 0;

  void validate() const {
    if (d < 4) throw InvalidArgument("the spin chain needs d >= 4");
    if (n < 1) throw InvalidArgument("n must be positive");
    if (burn_in < 0) throw InvalidArgument("burn-in must be nonnegative");
  }

  long default_burn_in() const { return static_cast<long>(std::ceil(100.0 * d * std::log(d))); }
};

namespace detail {

inline int cyc(int i, int d) { return ((i % d) + d) % d; }

}  // namespace detail

inline void check_spins(const Spins& x) {
  for (int v : x)
    if (v != 1 && v != -1) throw InvalidArgument("spin entries must be +1 or -1");
}

// Coordinate I becomes -X_{I-1} (flip = true) or +X_{I+1} (flip = false).
inline Spins spin_chain_step_at(const Spins& x, int I, bool flip) {
  const int d = static_cast<int>(x.size());
  Spins out = x;
  out[I] = flip ? -x[detail::cyc(I - 1, d)] : x[detail::cyc(I + 1, d)];
  return out;
}

inline Spins spin_chain_step(const Spins& x, Rng& rng) {
  const int I = static_cast<int>(uniform_index(rng, x.size()));
  return spin_chain_step_at(x, I, (rng() >> 63) != 0);
}

// (1/d)(1 on the diagonal, 1/2 at j = i-1, -1/2 at j = i+1), cyclic.
inline Matrix spin_chain_lambda(int d) {
  if (d < 4) throw InvalidArgument("the spin chain needs d >= 4");
  Matrix l = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    l(i, i) = 1.0;
    l(i, detail::cyc(i - 1, d)) = 0.5;
    l(i, detail::cyc(i + 1, d)) = -0.5;
  }
  return l / d;
}

inline Vector spins_vector(const Spins& x) {
  Vector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return v;
}

// E[X' - X | X] over the 2d equally likely moves.
inline Vector spin_chain_drift(const Spins& x) {
  const int d = static_cast<int>(x.size());
  Vector acc = Vector::Zero(d);
  for (int I = 0; I < d; ++I)
    for (bool flip : {false, true}) acc += spins_vector(spin_chain_step_at(x, I, flip)) - spins_vector(x);
  return acc / (2.0 * d);
}

// E[X'_i X'_j | X] by averaging the moves.
inline Matrix spin_conditional_products(const Spins& x) {
  const int d = static_cast<int>(x.size());
  Matrix acc = Matrix::Zero(d, d);
  for (int I = 0; I < d; ++I)
    for (bool flip : {false, true}) {
      const Vector y = spins_vector(spin_chain_step_at(x, I, flip));
      acc.noalias() += y * y.transpose();
    }
  return acc / (2.0 * d);
}

// (1/2d)(X_{i+1} - X_{i-1}) X_j + (1/2d) X_i (X_{j+1} - X_{j-1}) + ((d-2)/d) X_i X_j, i != j.
inline double spin_product_formula(const Spins& x, int i, int j) {
  const int d = static_cast<int>(x.size());
  auto X = [&](int k) { return static_cast<double>(x[detail::cyc(k, d)]); };
  return (X(i + 1) - X(i - 1)) * X(j) / (2.0 * d) + X(i) * (X(j + 1) - X(j - 1)) / (2.0 * d) +
         (d - 2.0) / d * X(i) * X(j);
}

inline std::uint32_t spin_code(const Spins& x) {
  std::uint32_t c = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0) c |= 1u << i;
  return c;
}

inline Spins spin_decode(std::uint32_t c, int d) {
  Spins x(d);
  for (int i = 0; i < d; ++i) x[i] = (c >> i) & 1u ? 1 : -1;
  return x;
}

// Largest deviation of a column sum of the 2^d transition matrix from 1.
// Zero means the uniform law is stationary.
inline double spin_doubly_stochastic_defect(int d) {
  if (d < 1 || d > 16) throw InvalidArgument("transition matrix check limited to d <= 16");
  const std::uint32_t states = 1u << d;
  std::vector<double> col(states, 0.0);
  for (std::uint32_t c = 0; c < states; ++c) {
    const Spins x = spin_decode(c, d);
    for (int I = 0; I < d; ++I)
      for (bool flip : {false, true}) col[spin_code(spin_chain_step_at(x, I, flip))] += 1.0 / (2.0 * d);
  }
  double worst = 0.0;
  for (double v : col) worst = std::max(worst, std::abs(v - 1.0));
  return worst;
}

inline Spins uniform_spins(int d, Rng& rng) {
  Spins x(d);
  for (auto& v : x) v = (rng() >> 63) ? 1 : -1;
  return x;
}

inline Spins equilibrium_spins(int d, long burn_in, Rng& rng) {
  Spins x = uniform_spins(d, rng);
  for (long k = 0; k < burn_in; ++k) x = spin_chain_step(x, rng);
  return x;
}

// Time averages of X_i X_j along independent replicas (one per batch), each
// started from equilibrium and run for steps / batches moves. Returns
// estimates for i < j, row-major.
struct SpinCorrelations {
  int d = 0;
  std::vector<Estimate> pairs;

  double max_z(double floor = 1e-12) const {
    double z = 0.0;
    for (const auto& e : pairs) z = std::max(z, std::abs(e.value) / std::max(e.std_error, floor));
    return z;
  }
};

inline SpinCorrelations spin_stationary_correlations(int d, long steps, long burn_in, std::uint64_t seed,
                                                     Parallelism par = {}) {
  if (d < 4) throw InvalidArgument("the spin chain needs d >= 4");
  const int width = d * (d - 1) / 2;
  const std::size_t replicas = kBatches;
  const long per = std::max<long>(1, steps / static_cast<long>(replicas));
  // Each monte_carlo "sample" is one replica's time average.
  const BatchMeans bm = monte_carlo(
      replicas, seed, width,
      [&](Rng& rng, std::span<double> out) {
        Spins x = equilibrium_spins(d, burn_in, rng);
        for (long k = 0; k < per; ++k) {
          x = spin_chain_step(x, rng);
          int c = 0;
          for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) out[c++] += static_cast<double>(x[i] * x[j]) / per;
        }
      },
      par);
  SpinCorrelations r;
  r.d = d;
  for (int c = 0; c < width; ++c) r.pairs.push_back(bm.estimate(c));
  return r;
}

// W = n^{-1/2} sum_k X^(k) over n independent equilibrium vectors; one step
// moves a uniformly chosen vector. L(W') = L(W) but the pair is not
// exchangeable.
class SpinSumPairModel {
 public:
  using Config = std::vector<Spins>;

  explicit SpinSumPairModel(SpinChainConfig cfg) : cfg_(cfg), scale_(1.0 / std::sqrt(static_cast<double>(cfg.n))) {
    cfg_.validate();
  }

  const SpinChainConfig& config() const { return cfg_; }
  int dim() const { return cfg_.d; }

  Config sample(Rng& rng) const {
    Config c(cfg_.n);
    for (auto& x : c) x = equilibrium_spins(cfg_.d, cfg_.burn_in, rng);
    return c;
  }

  Config step(const Config& c, Rng& rng) const {
    Config out = c;
    const auto k = uniform_index(rng, c.size());
    out[k] = spin_chain_step(c[k], rng);
    return out;
  }

  Vector statistic(const Config& c) const {
    Vector w = Vector::Zero(cfg_.d);
    for (const auto& x : c)
      for (int i = 0; i < cfg_.d; ++i) w(i) += x[i];
    return scale_ * w;
  }

  void for_each_step(const Config& c, const StepVisitor& fn) const {
    const double p = 1.0 / (2.0 * cfg_.d * cfg_.n);
    for (const auto& x : c) {
      const Vector v = spins_vector(x);
      for (int I = 0; I < cfg_.d; ++I)
        for (bool flip : {false, true}) fn(scale_ * (spins_vector(spin_chain_step_at(x, I, flip)) - v), p);
    }
  }

  Vector drift(const Config& c) const { return -claimed_lambda_matrix() * statistic(c); }

  Matrix claimed_lambda_matrix() const { return spin_chain_lambda(cfg_.d) / cfg_.n; }
  std::optional<Matrix> claimed_lambda() const { return claimed_lambda_matrix(); }
  std::optional<Matrix> claimed_sigma() const { return Matrix(Matrix::Identity(cfg_.d, cfg_.d)); }
  bool exchangeable() const { return false; }

 private:
  SpinChainConfig cfg_;
  double scale_;
};

// A single chain viewed as a pair model: W = X, W' = one step.
class SpinChainPairModel {
 public:
  using Config = Spins;

  explicit SpinChainPairModel(int d) : d_(d) {
    if (d < 4) throw InvalidArgument("the spin chain needs d >= 4");
  }

  int dim() const { return d_; }
  Config sample(Rng& rng) const { return uniform_spins(d_, rng); }
  Config step(const Config& x, Rng& rng) const { return spin_chain_step(x, rng); }
  Vector statistic(const Config& x) const { return spins_vector(x); }

  void for_each_step(const Config& x, const StepVisitor& fn) const {
    const Vector v = spins_vector(x);
    for (int I = 0; I < d_; ++I)
      for (bool flip : {false, true}) fn(spins_vector(spin_chain_step_at(x, I, flip)) - v, 1.0 / (2.0 * d_));
  }

  std::uint64_t config_space_size() const { return std::uint64_t{1} << d_; }
  void for_each_config(const ConfigVisitor<SpinChainPairModel>& fn) const {
    const double p = 1.0 / static_cast<double>(config_space_size());
    for (std::uint32_t c = 0; c < (1u << d_); ++c) fn(spin_decode(c, d_), p);
  }

  std::optional<Matrix> claimed_lambda() const { return spin_chain_lambda(d_); }
  std::optional<Matrix> claimed_sigma() const { return Matrix(Matrix::Identity(d_, d_)); }
  bool exchangeable() const { return false; }

 private:
  int d_;
};

}  // namespace steinpairs
