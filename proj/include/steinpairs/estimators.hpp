#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "steinpairs/bounds.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_checks.hpp"
#include "steinpairs/pair_model.hpp"

namespace steinpairs {

struct EstimatorOptions {
  std::uint64_t enumeration_cap = std::uint64_t{1} << 20;
  bool force_monte_carlo = false;
  Parallelism par{};
};

// A matrix (or flattened tensor) of estimates sharing one backend.
struct MomentArray {
  std::vector<double> value;
  std::vector<double> std_error;
  EstimateMode mode = EstimateMode::exact_enumeration;
  std::size_t n_effective = 0;
  std::string note;

  Estimate at(std::size_t k) const { return {value[k], std_error[k], mode, n_effective, note}; }
};

template <PairModel M>
bool can_enumerate(const M& m, const EstimatorOptions& opt) {
  if constexpr (Enumerable<M>) {
    return !opt.force_monte_carlo && m.config_space_size() <= opt.enumeration_cap;
  } else {
    (void)m;
    (void)opt;
    return false;
  }
}

template <PairModel M>
std::string fallback_note(const M& m, const EstimatorOptions& opt) {
  if constexpr (Enumerable<M>) {
    if (!opt.force_monte_carlo && m.config_space_size() > opt.enumeration_cap)
      return "configuration space exceeds the enumeration cap; Monte Carlo fallback";
  }
  (void)m;
  (void)opt;
  return {};
}

namespace detail {

// Weighted mean and variance of per-configuration records over the whole
// (enumerated) configuration space. Two passes keep constant records at
// exactly zero variance.
template <PairModel M, class Rec>
std::pair<Vector, Vector> enumerate_moments(const M& m, int width, Rec&& rec) {
  if constexpr (Enumerable<M>) {
    Vector sum = Vector::Zero(width);
    double mass = 0.0;
    Vector first;
    std::vector<bool> constant(width, true);
    m.for_each_config([&](const typename M::Config& c, double p) {
      const Vector r = rec(c);
      if (first.size() == 0) first = r;
      for (int k = 0; k < width; ++k)
        if (r(k) != first(k)) constant[k] = false;
      sum += p * r;
      mass += p;
    });
    const Vector mean = sum / mass;
    Vector var = Vector::Zero(width);
    m.for_each_config([&](const typename M::Config& c, double p) { var += p * (rec(c) - mean).cwiseAbs2(); });
    var /= mass;
    Vector out_mean = mean;
    for (int k = 0; k < width; ++k)
      if (constant[k]) {
        out_mean(k) = first(k);
        var(k) = 0.0;
      }
    return {out_mean, var};
  } else {
    throw InvalidArgument("model is not enumerable");
  }
}

template <PairModel M>
Vector flat_fine_moment(const M& m, const typename M::Config& c) {
  const Matrix f = fine_second_moment_at(m, c);
  return Eigen::Map<const Vector>(f.data(), f.size());  // column-major: index i + d*j
}

// E[|dW_i dW_j dW_k| | omega] for every (i, j, k), flattened as (i*d + j)*d + k.
template <PairModel M>
Vector fine_third(const M& m, const typename M::Config& c) {
  const int d = m.dim();
  Vector t = Vector::Zero(d * d * d);
  m.for_each_step(c, [&](const Vector& dw, double p) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) t((i * d + j) * d + k) += p * std::abs(dw(i) * dw(j) * dw(k));
  });
  return t;
}

template <PairModel M>
Vector sampled_third(const M& m, const typename M::Config& c, Rng& rng) {
  const int d = m.dim();
  const Vector dw = Vector(m.statistic(m.step(c, rng))) - Vector(m.statistic(c));
  Vector t(d * d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) t((i * d + j) * d + k) = std::abs(dw(i) * dw(j) * dw(k));
  return t;
}

}  // namespace detail

// Var over configurations of E[dW_i dW_j | omega] for all (i, j), index i + d*j.
//
// Conditioning on the full configuration rather than on W gives an upper
// bound for Var E^W(...) by Jensen's inequality.
template <PairModel M>
MomentArray cond_variance_all(const M& m, std::size_t n, std::uint64_t seed, EstimatorOptions opt = {}) {
  if constexpr (!has_fine_conditional<M>()) {
    throw NoFineConditional("model cannot average its step analytically");
  } else {
    const int d = m.dim(), w = d * d;
    MomentArray out;
    out.note = "fine-conditioning surrogate (upper bound)";
    if (can_enumerate(m, opt)) {
      if constexpr (Enumerable<M>) {
        auto [mean, var] = detail::enumerate_moments(m, w, [&](const auto& c) { return detail::flat_fine_moment(m, c); });
        out.value.assign(var.data(), var.data() + w);
        out.std_error.assign(w, 0.0);
        out.n_effective = m.config_space_size();
      }
      return out;
    }
    const BatchMeans bm = monte_carlo(
        n, seed, 2 * w,
        [&](Rng& rng, std::span<double> rec) {
          const Vector f = detail::flat_fine_moment(m, m.sample(rng));
          for (int k = 0; k < w; ++k) {
            rec[k] = f(k);
            rec[w + k] = f(k) * f(k);
          }
        },
        opt.par);
    out.mode = EstimateMode::monte_carlo;
    out.n_effective = n;
    for (int k = 0; k < w; ++k) {
      const Estimate e = bm.transformed([&](const Vector& mu) { return std::max(0.0, mu(w + k) - mu(k) * mu(k)); });
      out.value.push_back(e.value);
      out.std_error.push_back(e.std_error);
    }
    const std::string fb = fallback_note(m, opt);
    if (!fb.empty()) out.note += "; " + fb;
    return out;
  }
}

template <PairModel M>
Estimate cond_variance(const M& m, int i, int j, std::size_t n, std::uint64_t seed, EstimatorOptions opt = {}) {
  const int d = m.dim();
  if (i < 0 || j < 0 || i >= d || j >= d) throw InvalidArgument("coordinate index out of range");
  return cond_variance_all(m, n, seed, opt).at(static_cast<std::size_t>(i + d * j));
}

// Exact Var E[dW_i dW_j | W], grouping enumerated configurations by the value
// of W (rounded to 1e-9).
template <PairModel M>
MomentArray cond_variance_w_level(const M& m, EstimatorOptions opt = {}) {
  if constexpr (!(Enumerable<M> && has_fine_conditional<M>())) {
    throw InvalidArgument("W-level conditioning needs an enumerable model with a fine conditional");
  } else {
    if (m.config_space_size() > opt.enumeration_cap) throw InvalidArgument("configuration space exceeds the enumeration cap");
    const int d = m.dim(), w = d * d;
    struct Cell {
      double mass = 0.0;
      Vector sum;
    };
    std::map<std::vector<long long>, Cell> cells;
    double total = 0.0;
    m.for_each_config([&](const typename M::Config& c, double p) {
      const Vector wv = m.statistic(c);
      std::vector<long long> key(d);
      for (int k = 0; k < d; ++k) key[k] = std::llround(wv(k) * 1e9);
      auto& cell = cells[key];
      if (cell.sum.size() == 0) cell.sum = Vector::Zero(w);
      cell.mass += p;
      cell.sum += p * detail::flat_fine_moment(m, c);
      total += p;
    });
    Vector mean = Vector::Zero(w);
    for (const auto& [k, cell] : cells) mean += cell.sum;
    mean /= total;
    Vector var = Vector::Zero(w);
    for (const auto& [k, cell] : cells) var += cell.mass * (cell.sum / cell.mass - mean).cwiseAbs2();
    var /= total;
    MomentArray out;
    out.value.assign(var.data(), var.data() + w);
    out.std_error.assign(w, 0.0);
    out.n_effective = m.config_space_size();
    out.note = "conditioned on W";
    return out;
  }
}

// E|dW_i dW_j dW_k| for all triples, flattened as (i*d + j)*d + k.
template <PairModel M>
MomentArray third_abs_all(const M& m, std::size_t n, std::uint64_t seed, EstimatorOptions opt = {}) {
  const int d = m.dim(), w = d * d * d;
  MomentArray out;
  if constexpr (StepEnumerable<M>) {
    if (can_enumerate(m, opt)) {
      auto [mean, var] = detail::enumerate_moments(m, w, [&](const auto& c) { return detail::fine_third(m, c); });
      out.value.assign(mean.data(), mean.data() + w);
      out.std_error.assign(w, 0.0);
      if constexpr (Enumerable<M>) out.n_effective = m.config_space_size();
      return out;
    }
  }
  const BatchMeans bm = monte_carlo(
      n, seed, w,
      [&](Rng& rng, std::span<double> rec) {
        const auto c = m.sample(rng);
        Vector t;
        if constexpr (StepEnumerable<M>)
          t = detail::fine_third(m, c);
        else
          t = detail::sampled_third(m, c, rng);
        for (int k = 0; k < w; ++k) rec[k] = t(k);
      },
      opt.par);
  out.mode = EstimateMode::monte_carlo;
  out.n_effective = n;
  const Vector mu = bm.overall(), se = bm.std_error();
  out.value.assign(mu.data(), mu.data() + w);
  out.std_error.assign(se.data(), se.data() + w);
  if constexpr (StepEnumerable<M>) out.note = "step outcomes averaged exactly per configuration";
  const std::string fb = fallback_note(m, opt);
  if (!fb.empty()) out.note += (out.note.empty() ? "" : "; ") + fb;
  return out;
}

template <PairModel M>
Estimate third_abs_moment(const M& m, int i, int j, int k, std::size_t n, std::uint64_t seed,
                          EstimatorOptions opt = {}) {
  const int d = m.dim();
  if (i < 0 || j < 0 || k < 0 || i >= d || j >= d || k >= d) throw InvalidArgument("coordinate index out of range");
  return third_abs_all(m, n, seed, opt).at(static_cast<std::size_t>((i * d + j) * d + k));
}

// The three coupling terms of the smooth-function bound, estimated jointly.
struct TheoremTerms {
  Estimate A, B, C;
  Estimate C_second_moment;  // C with sqrt(E R_i^2) in place of sqrt(Var R_i)
  Vector lambda_weights;
  Vector r_var;
  EstimateMode mode = EstimateMode::exact_enumeration;
  std::vector<std::string> notes;
};

struct TermOptions : EstimatorOptions {
  LinearityOptions linearity{};
};

template <PairModel M>
TheoremTerms theorem_terms(const M& m, const SquareMatrix& lambda, std::size_t n, std::uint64_t seed,
                           TermOptions opt = {}) {
  if constexpr (!has_fine_conditional<M>()) {
    throw NoFineConditional("term A needs an exactly averaged step");
  } else {
    const int d = m.dim();
    require_square(lambda, "Lambda");
    if (lambda.rows() != d) throw InvalidArgument("Lambda must match the model dimension");
    const int nf = d * d, nt = d * d * d;
    constexpr bool exact_r = has_exact_drift<M>();
    const int width = nf + nt + d;

    TheoremTerms out;
    out.lambda_weights = lambda_weights(lambda);
    const Vector lw = out.lambda_weights;
    out.notes.push_back("A uses the fine-conditioning surrogate");

    auto record = [&](const typename M::Config& c, Rng* rng) {
      Vector r(width);
      r.head(nf) = detail::flat_fine_moment(m, c);
      if constexpr (StepEnumerable<M>)
        r.segment(nf, nt) = detail::fine_third(m, c);
      else
        r.segment(nf, nt) = detail::sampled_third(m, c, *rng);
      if constexpr (exact_r)
        r.tail(d) = drift_at(m, c) + lambda * Vector(m.statistic(c));
      else
        r.tail(d).setZero();
      return r;
    };
    auto a_of = [&](const Vector& var_f) {
      double a = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a += lw(i) * std::sqrt(std::max(0.0, var_f(i + d * j)));
      return a;
    };
    auto b_of = [&](const Vector& third) {
      double b = 0.0;
      for (int i = 0; i < d; ++i)
        for (int jk = 0; jk < d * d; ++jk) b += lw(i) * third(i * d * d + jk);
      return b;
    };
    auto c_of = [&](const Vector& v) {
      double c = 0.0;
      for (int i = 0; i < d; ++i) c += lw(i) * std::sqrt(std::max(0.0, v(i)));
      return c;
    };

    bool enumerated = false;
    if constexpr (Enumerable<M> && StepEnumerable<M>) {
      if (can_enumerate(m, opt)) {
        auto [mean, var] = detail::enumerate_moments(m, width, [&](const auto& c) { return record(c, nullptr); });
        out.A = Estimate::exact(a_of(var.head(nf)), m.config_space_size());
        out.B = Estimate::exact(b_of(mean.segment(nf, nt)), m.config_space_size());
        out.r_var = var.tail(d);
        out.C = Estimate::exact(c_of(out.r_var), m.config_space_size());
        out.C_second_moment =
            Estimate::exact(c_of(var.tail(d) + mean.tail(d).cwiseAbs2()), m.config_space_size());
        enumerated = true;
      }
    }
    if (!enumerated) {
      const BatchMeans bm = monte_carlo(
          n, seed, width + nf + d,
          [&](Rng& rng, std::span<double> rec) {
            const Vector r = record(m.sample(rng), &rng);
            for (int k = 0; k < width; ++k) rec[k] = r(k);
            for (int k = 0; k < nf; ++k) rec[width + k] = r(k) * r(k);
            for (int k = 0; k < d; ++k) rec[width + nf + k] = r(nf + nt + k) * r(nf + nt + k);
          },
          opt.par);
      auto var_f = [&](const Vector& mu) {
        return Vector((mu.segment(width, nf) - mu.head(nf).cwiseAbs2()).cwiseMax(0.0));
      };
      auto var_r = [&](const Vector& mu) {
        return Vector((mu.segment(width + nf, d) - mu.segment(nf + nt, d).cwiseAbs2()).cwiseMax(0.0));
      };
      out.A = bm.transformed([&](const Vector& mu) { return a_of(var_f(mu)); });
      out.B = bm.transformed([&](const Vector& mu) { return b_of(mu.segment(nf, nt)); });
      out.C = bm.transformed([&](const Vector& mu) { return c_of(var_r(mu)); });
      out.C_second_moment = bm.transformed([&](const Vector& mu) { return c_of(mu.segment(width + nf, d)); });
      out.r_var = var_r(bm.overall());
      out.mode = EstimateMode::monte_carlo;
      const std::string fb = fallback_note(m, opt);
      if (!fb.empty()) out.notes.push_back(fb);
    }
    if constexpr (!exact_r) {
      // Remainder from a regression with inner Monte Carlo drift estimates.
      const LinearityFit fit = estimate_linearity(m, n, derive_seed(seed, 0xc0ffee), opt.linearity);
      out.r_var = var_R(fit);
      out.C = {c_of(out.r_var), 0.0, EstimateMode::monte_carlo, n, "remainder from the fitted Lambda"};
      out.C_second_moment = {c_of(out.r_var + fit.r_mean.cwiseAbs2()), 0.0, EstimateMode::monte_carlo, n, {}};
      out.notes.push_back("C from the regression remainder (fitted Lambda)");
    }
    return out;
  }
}

}  // namespace steinpairs
