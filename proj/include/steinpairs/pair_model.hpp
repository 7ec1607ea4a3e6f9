#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"

namespace steinpairs {

// An exchangeable-pair coupling: a configuration sampler, the statistic
// W(omega) and one resampling move omega -> omega'.
template <class M>
concept PairModel = requires(const M& m, const typename M::Config& c, Rng& rng) {
  typename M::Config;
  { m.dim() } -> std::convertible_to<int>;
  { m.sample(rng) } -> std::same_as<typename M::Config>;
  { m.statistic(c) } -> std::convertible_to<Vector>;
  { m.step(c, rng) } -> std::same_as<typename M::Config>;
};

// Exact E[W(omega') - W(omega) | omega].
template <class M>
concept HasDrift = PairModel<M> && requires(const M& m, const typename M::Config& c) {
  { m.drift(c) } -> std::convertible_to<Vector>;
};

// Visitor over every outcome of one step: fn(delta_w, probability).
using StepVisitor = std::function<void(const Vector&, double)>;

template <class M>
concept StepEnumerable = PairModel<M> && requires(const M& m, const typename M::Config& c, const StepVisitor& fn) {
  m.for_each_step(c, fn);
};

template <class M>
using ConfigVisitor = std::function<void(const typename M::Config&, double)>;

// Finite configuration space with an exact enumeration rule.
template <class M>
concept Enumerable = PairModel<M> && requires(const M& m, const ConfigVisitor<M>& fn) {
  { m.config_space_size() } -> std::convertible_to<std::uint64_t>;
  m.for_each_config(fn);
};

// Closed-form E[dW dW^t | omega].
template <class M>
concept HasFineSecondMoment = PairModel<M> && requires(const M& m, const typename M::Config& c) {
  { m.fine_second_moment(c) } -> std::convertible_to<Matrix>;
};

template <PairModel M>
std::optional<Matrix> claimed_lambda(const M& m) {
  if constexpr (requires { m.claimed_lambda(); })
    return m.claimed_lambda();
  else
    return std::nullopt;
}

template <PairModel M>
std::optional<Matrix> claimed_sigma(const M& m) {
  if constexpr (requires { m.claimed_sigma(); })
    return m.claimed_sigma();
  else
    return std::nullopt;
}

template <PairModel M>
bool is_exchangeable(const M& m) {
  if constexpr (requires { m.exchangeable(); })
    return m.exchangeable();
  else
    return true;
}

template <PairModel M>
constexpr bool has_fine_conditional() {
  return HasFineSecondMoment<M> || StepEnumerable<M>;
}

template <PairModel M>
constexpr bool has_exact_drift() {
  return HasDrift<M> || StepEnumerable<M>;
}

// Exact conditional drift, from the closed form or the step enumeration.
template <PairModel M>
Vector drift_at(const M& m, const typename M::Config& c) {
  if constexpr (HasDrift<M>) {
    return m.drift(c);
  } else if constexpr (StepEnumerable<M>) {
    Vector acc = Vector::Zero(m.dim());
    m.for_each_step(c, [&](const Vector& dw, double p) { acc += p * dw; });
    return acc;
  } else {
    throw NoFineConditional("model has neither an analytic drift nor an enumerable step");
  }
}

// Monte Carlo drift from `inner` independent steps; also returns the
// per-coordinate variance of the estimate.
template <PairModel M>
std::pair<Vector, Vector> drift_mc(const M& m, const typename M::Config& c, Rng& rng, int inner) {
  const Vector w = m.statistic(c);
  Vector s = Vector::Zero(m.dim()), s2 = Vector::Zero(m.dim());
  for (int k = 0; k < inner; ++k) {
    const Vector dw = Vector(m.statistic(m.step(c, rng))) - w;
    s += dw;
    s2 += dw.cwiseAbs2();
  }
  const Vector mean = s / inner;
  Vector var = (s2 / inner - mean.cwiseAbs2()).cwiseMax(0.0) * (static_cast<double>(inner) / (inner - 1));
  return {mean, var / inner};
}

// E[dW dW^t | omega].
template <PairModel M>
Matrix fine_second_moment_at(const M& m, const typename M::Config& c) {
  if constexpr (HasFineSecondMoment<M>) {
    return m.fine_second_moment(c);
  } else if constexpr (StepEnumerable<M>) {
    Matrix acc = Matrix::Zero(m.dim(), m.dim());
    m.for_each_step(c, [&](const Vector& dw, double p) { acc.noalias() += p * dw * dw.transpose(); });
    return acc;
  } else {
    throw NoFineConditional("model cannot average its step analytically");
  }
}

// Linear image W -> T W of a pair model. Covers reordering, projection onto
// leading coordinates, rescaling and standardization.
template <PairModel M>
class Transformed {
 public:
  using Config = typename M::Config;

  Transformed(M base, Matrix t) : base_(std::move(base)), t_(std::move(t)) {
    if (t_.cols() != base_.dim() || t_.rows() < 1)
      throw InvalidArgument("transform must have as many columns as the base dimension");
  }

  int dim() const { return static_cast<int>(t_.rows()); }
  const M& base() const { return base_; }
  const Matrix& transform() const { return t_; }

  Config sample(Rng& rng) const { return base_.sample(rng); }
  Config step(const Config& c, Rng& rng) const { return base_.step(c, rng); }
  Vector statistic(const Config& c) const { return t_ * Vector(base_.statistic(c)); }

  Vector drift(const Config& c) const
    requires(has_exact_drift<M>())
  {
    return t_ * drift_at(base_, c);
  }

  void for_each_step(const Config& c, const StepVisitor& fn) const
    requires StepEnumerable<M>
  {
    base_.for_each_step(c, [&](const Vector& dw, double p) { fn(t_ * dw, p); });
  }

  Matrix fine_second_moment(const Config& c) const
    requires(has_fine_conditional<M>())
  {
    return t_ * fine_second_moment_at(base_, c) * t_.transpose();
  }

  std::uint64_t config_space_size() const
    requires Enumerable<M>
  {
    return base_.config_space_size();
  }

  void for_each_config(const ConfigVisitor<M>& fn) const
    requires Enumerable<M>
  {
    base_.for_each_config(fn);
  }

  // T Lambda T^{-1}; only defined for square invertible transforms.
  std::optional<Matrix> claimed_lambda() const {
    auto l = steinpairs::claimed_lambda(base_);
    if (!l || t_.rows() != t_.cols()) return std::nullopt;
    return Matrix(t_ * *l * invert(t_));
  }

  std::optional<Matrix> claimed_sigma() const {
    auto s = steinpairs::claimed_sigma(base_);
    if (!s) return std::nullopt;
    return Matrix(t_ * *s * t_.transpose());
  }

  bool exchangeable() const { return is_exchangeable(base_); }

 private:
  M base_;
  Matrix t_;
};

inline Matrix permutation_matrix(const std::vector<int>& order, int d) {
  Matrix p = Matrix::Zero(static_cast<int>(order.size()), d);
  for (int r = 0; r < static_cast<int>(order.size()); ++r) {
    if (order[r] < 0 || order[r] >= d) throw InvalidArgument("coordinate index out of range");
    p(r, order[r]) = 1.0;
  }
  return p;
}

// Keep coordinates in `order` (0-based), in that order.
template <PairModel M>
Transformed<M> reorder(M m, const std::vector<int>& order) {
  const int d = m.dim();
  return Transformed<M>(std::move(m), permutation_matrix(order, d));
}

// Sigma^{-1/2} W.
template <PairModel M>
Transformed<M> standardize(M m, const SymMatrix& sigma) {
  return Transformed<M>(std::move(m), inverse_sqrt(sigma).matrix());
}

}  // namespace steinpairs
