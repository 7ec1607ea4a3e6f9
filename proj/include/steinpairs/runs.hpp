#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "steinpairs/bounds.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"

namespace steinpairs {

// Cyclic Bernoulli(p) sequence of length n with run lengths 1..d.
struct RunsConfig {
  int n = 10;
  int d = 2;
  double p = 0.5;

  // n >= 2d - 1 keeps the d + i - 2 windows touched by one step distinct.
  void validate() const {
    if (d < 2) throw InvalidArgument("run length d must be at least 2");
    if (n < 2 * d - 1) throw InvalidArgument("sequence length n must be at least 2d - 1");
    if (!(p >= 1e-6 && p <= 1.0 - 1e-6)) throw InvalidArgument("p must lie in [1e-6, 1 - 1e-6]");
  }

  // Windows at distance >= 3d are disjoint, as the variance envelope assumes.
  bool meets_independence_radius() const { return n >= 3 * d; }
};

using RunsState = std::vector<std::uint8_t>;

namespace detail {

inline int wrap(long long k, int n) {
  const long long r = k % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

}  // namespace detail

// Raw run counts sum_m xi_m ... xi_{m+i-1}, i = 1..d (torus).
inline Vector runs_counts(const RunsState& xi, int d) {
  const int n = static_cast<int>(xi.size());
  Vector c = Vector::Zero(d);
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < d; ++i) {
      if (!xi[detail::wrap(m + i, n)]) break;
      c(i) += 1.0;
    }
  }
  return c;
}

// sqrt(n p^i (1 - p)).
inline Vector runs_scale(const RunsConfig& cfg) {
  Vector s(cfg.d);
  for (int i = 1; i <= cfg.d; ++i) s(i - 1) = std::sqrt(cfg.n * std::pow(cfg.p, i) * (1.0 - cfg.p));
  return s;
}

// Centered counts V_i.
inline Vector runs_v(const RunsState& xi, const RunsConfig& cfg) {
  Vector v = runs_counts(xi, cfg.d);
  for (int i = 1; i <= cfg.d; ++i) v(i - 1) -= cfg.n * std::pow(cfg.p, i);
  return v;
}

inline Vector runs_statistic(const RunsState& xi, const RunsConfig& cfg) {
  return runs_v(xi, cfg).cwiseQuotient(runs_scale(cfg));
}

inline void check_state(const RunsState& xi, const RunsConfig& cfg) {
  if (static_cast<int>(xi.size()) != cfg.n) throw InvalidArgument("state length differs from n");
  for (auto b : xi)
    if (b > 1) throw InvalidArgument("state entries must be 0 or 1");
}

// Change of V when positions I..I+d-2 are overwritten by `fresh`; only the
// d + i - 2 windows touching the block are recounted.
inline Vector runs_delta_v(const RunsState& xi, const RunsConfig& cfg, int I, const std::uint8_t* fresh) {
  const int n = cfg.n, d = cfg.d;
  auto bit = [&](long long pos, bool updated) -> int {
    const int q = detail::wrap(pos, n);
    const int off = detail::wrap(q - I, n);
    return (updated && off < d - 1) ? fresh[off] : xi[q];
  };
  Vector dv = Vector::Zero(d);
  for (int i = 1; i <= d; ++i) {
    double acc = 0.0;
    for (long long m = static_cast<long long>(I) - i + 1; m <= I + d - 2; ++m) {
      int before = 1, after = 1;
      for (int t = 0; t < i; ++t) {
        before &= bit(m + t, false);
        after &= bit(m + t, true);
      }
      acc += after - before;
    }
    dv(i - 1) = acc;
  }
  return dv;
}

inline RunsState runs_step_at(const RunsState& xi, const RunsConfig& cfg, int I, const std::vector<std::uint8_t>& fresh) {
  if (static_cast<int>(fresh.size()) != cfg.d - 1) throw InvalidArgument("fresh block must have d - 1 bits");
  if (I < 0 || I >= cfg.n) throw InvalidArgument("window start out of range");
  RunsState out = xi;
  for (int k = 0; k < cfg.d - 1; ++k) out[detail::wrap(I + k, cfg.n)] = fresh[k];
  return out;
}

// Uniform I, then d - 1 fresh Bernoulli(p) bits from position I on.
inline RunsState runs_step(const RunsState& xi, const RunsConfig& cfg, Rng& rng) {
  const int I = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cfg.n)));
  std::vector<std::uint8_t> fresh(cfg.d - 1);
  for (auto& b : fresh) b = bernoulli(rng, cfg.p);
  return runs_step_at(xi, cfg, I, fresh);
}

// E[V' - V | xi] (or its standardized version), summing over window starts
// and averaging every fresh bit to p.
inline Vector runs_drift(const RunsState& xi, const RunsConfig& cfg, bool standardized = true) {
  const int n = cfg.n, d = cfg.d;
  Vector acc = Vector::Zero(d);
  for (int I = 0; I < n; ++I) {
    for (int i = 1; i <= d; ++i) {
      for (long long m = static_cast<long long>(I) - i + 1; m <= I + d - 2; ++m) {
        double before = 1.0, after = 1.0;
        for (int t = 0; t < i; ++t) {
          const int q = detail::wrap(m + t, n);
          const double x = xi[q];
          before *= x;
          after *= detail::wrap(q - I, n) < d - 1 ? cfg.p : x;
        }
        acc(i - 1) += after - before;
      }
    }
  }
  acc /= n;
  return standardized ? Vector(acc.cwiseQuotient(runs_scale(cfg))) : acc;
}

// Lower-triangular Lambda: (d+i-2)/n on the diagonal, -2 p^{(i-k)/2}/n below
// (p^{i-k} for the unstandardized counts).
inline Matrix runs_lambda(const RunsConfig& cfg, bool standardized = true) {
  const int d = cfg.d;
  Matrix l = Matrix::Zero(d, d);
  for (int i = 1; i <= d; ++i) {
    l(i - 1, i - 1) = (d + i - 2.0) / cfg.n;
    for (int k = 1; k < i; ++k)
      l(i - 1, k - 1) = -2.0 * std::pow(cfg.p, standardized ? 0.5 * (i - k) : double(i - k)) / cfg.n;
  }
  return l;
}

// sigma_ij = p^{|i-j|/2} sum_{k=0}^{min(i,j)-1} (|i-j| + 1 + 2k) p^k; free of n.
inline SymMatrix runs_sigma(const RunsConfig& cfg) {
  const int d = cfg.d;
  Matrix s(d, d);
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) {
      const int diff = std::abs(i - j);
      double acc = 0.0;
      for (int k = 0; k < std::min(i, j); ++k) acc += (diff + 1 + 2 * k) * std::pow(cfg.p, k);
      s(i - 1, j - 1) = std::pow(cfg.p, 0.5 * diff) * acc;
    }
  return SymMatrix(s);
}

// E V_i V_j for 1 <= j <= i <= d.
inline double runs_cross_moment(const RunsConfig& cfg, int i, int j) {
  if (j < 1 || j > i || i > cfg.d) throw InvalidArgument("need 1 <= j <= i <= d");
  double acc = 0.0;
  for (int k = 0; k < j; ++k) acc += (i - j + 1 + 2 * k) * std::pow(cfg.p, k);
  return cfg.n * std::pow(cfg.p, i) * (1.0 - cfg.p) * acc;
}

inline double runs_state_probability(const RunsState& xi, double p) {
  const auto ones = std::count(xi.begin(), xi.end(), std::uint8_t{1});
  return std::pow(p, static_cast<double>(ones)) * std::pow(1.0 - p, static_cast<double>(xi.size() - ones));
}

struct RunsEnumeration {
  Vector mean_v;
  Matrix second_v;  // E V V^t
  Matrix second_w;  // E W W^t
  double mass = 0.0;
};

// Exact moments over all 2^n sequences; chunks reduce in a fixed order.
inline RunsEnumeration runs_enumerate_moments(const RunsConfig& cfg, Parallelism par = {}) {
  cfg.validate();
  if (cfg.n > 26) throw InvalidArgument("enumeration limited to n <= 26");
  const int d = cfg.d;
  const std::uint64_t total = std::uint64_t{1} << cfg.n;
  const std::size_t chunks = std::min<std::uint64_t>(kBatches, total);
  std::vector<Vector> mv(chunks, Vector::Zero(d));
  std::vector<Matrix> sv(chunks, Matrix::Zero(d, d));
  std::vector<double> mass(chunks, 0.0);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        RunsState xi(cfg.n);
        for (std::uint64_t s = total * c / chunks; s < total * (c + 1) / chunks; ++s) {
          for (int k = 0; k < cfg.n; ++k) xi[k] = (s >> k) & 1u;
          const double pr = runs_state_probability(xi, cfg.p);
          const Vector v = runs_v(xi, cfg);
          mv[c] += pr * v;
          sv[c].noalias() += pr * v * v.transpose();
          mass[c] += pr;
        }
      },
      par);
  RunsEnumeration out{Vector::Zero(d), Matrix::Zero(d, d), Matrix::Zero(d, d), 0.0};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.mean_v += mv[c];
    out.second_v += sv[c];
    out.mass += mass[c];
  }
  const Vector s = runs_scale(cfg);
  out.second_w = s.cwiseInverse().asDiagonal() * out.second_v * s.cwiseInverse().asDiagonal();
  return out;
}

// A signed monomial prod_{a in A} xi_{I+a} prod_{b in B} xi'_{I+b}.
struct RunsMonomial {
  int sign = 1;
  std::vector<int> a;  // sorted offsets of old bits
  std::vector<int> b;  // sorted offsets of fresh bits

  int degree() const { return static_cast<int>(a.size() + b.size()); }
};

// Symbolic V'_i - V_i: 2(d + i - 2) monomials, offsets relative to I.
inline std::vector<RunsMonomial> runs_delta_terms(int d, int i) {
  if (d < 2 || i < 1 || i > d) throw InvalidArgument("need d >= 2 and 1 <= i <= d");
  std::vector<RunsMonomial> out;
  for (int m = -i + 1; m <= d - 2; ++m) {
    RunsMonomial plus, minus;
    minus.sign = -1;
    for (int t = m; t < m + i; ++t) {
      (t >= 0 && t <= d - 2 ? plus.b : plus.a).push_back(t);
      minus.a.push_back(t);
    }
    out.push_back(plus);
    out.push_back(minus);
  }
  return out;
}

// Expansion of (V'_i - V_i)(V'_j - V_j); xi^2 = xi merges repeated offsets.
inline std::vector<RunsMonomial> runs_product_terms(int d, int i, int j) {
  const auto ti = runs_delta_terms(d, i), tj = runs_delta_terms(d, j);
  std::vector<RunsMonomial> out;
  out.reserve(ti.size() * tj.size());
  for (const auto& x : ti)
    for (const auto& y : tj) {
      RunsMonomial z;
      z.sign = x.sign * y.sign;
      std::set_union(x.a.begin(), x.a.end(), y.a.begin(), y.a.end(), std::back_inserter(z.a));
      std::set_union(x.b.begin(), x.b.end(), y.b.begin(), y.b.end(), std::back_inserter(z.b));
      out.push_back(std::move(z));
    }
  return out;
}

// Evaluates monomials at window start I with the fresh block `fresh`.
inline double runs_eval_terms(const std::vector<RunsMonomial>& terms, const RunsState& xi, int I,
                              const std::uint8_t* fresh) {
  const int n = static_cast<int>(xi.size());
  double acc = 0.0;
  for (const auto& t : terms) {
    int v = 1;
    for (int o : t.a) v &= xi[detail::wrap(I + o, n)];
    for (int o : t.b) v &= fresh[o];
    acc += t.sign * v;
  }
  return acc;
}

// Exact Var over (xi, xi~) of E[dW_i dW_j | xi, xi~] for all (i, j), where xi~
// is the full independent copy supplying the fresh bits and only the window
// start is averaged. Index i + d*j.
inline Matrix runs_paired_cond_variance(const RunsConfig& cfg) {
  cfg.validate();
  if (cfg.n > 12) throw InvalidArgument("paired enumeration limited to n <= 12");
  const int n = cfg.n, d = cfg.d, nb = 1 << (d - 1);
  const std::uint64_t total = std::uint64_t{1} << n;
  const Vector scale = runs_scale(cfg);
  Vector sum = Vector::Zero(d * d), sum2 = Vector::Zero(d * d);
  double mass = 0.0;
  RunsState xi(n);
  std::vector<Vector> table(static_cast<std::size_t>(n) * nb);
  std::vector<std::uint8_t> fresh(d - 1);
  std::vector<double> pr(total);
  for (std::uint64_t s = 0; s < total; ++s) {
    for (int k = 0; k < n; ++k) xi[k] = (s >> k) & 1u;
    pr[s] = runs_state_probability(xi, cfg.p);
  }
  for (std::uint64_t s = 0; s < total; ++s) {
    for (int k = 0; k < n; ++k) xi[k] = (s >> k) & 1u;
    for (int I = 0; I < n; ++I)
      for (int b = 0; b < nb; ++b) {
        for (int k = 0; k < d - 1; ++k) fresh[k] = (b >> k) & 1;
        const Vector dw = runs_delta_v(xi, cfg, I, fresh.data()).cwiseQuotient(scale);
        Vector f(d * d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) f(i + d * j) = dw(i) * dw(j);
        table[I * nb + b] = f;
      }
    for (std::uint64_t t = 0; t < total; ++t) {
      Vector f = Vector::Zero(d * d);
      for (int I = 0; I < n; ++I) {
        int b = 0;
        for (int k = 0; k < d - 1; ++k) b |= static_cast<int>((t >> detail::wrap(I + k, n)) & 1u) << k;
        f += table[I * nb + b];
      }
      f /= n;
      const double w = pr[s] * pr[t];
      sum += w * f;
      sum2 += w * f.cwiseAbs2();
      mass += w;
    }
  }
  const Vector mean = sum / mass;
  const Vector var = (sum2 / mass - mean.cwiseAbs2()).cwiseMax(0.0);
  return Eigen::Map<const Matrix>(var.data(), d, d);
}

// Envelope 768 d^5 / (n^3 p^{min(i,j)} (1-p)^2) for Var E(dW_i dW_j | fine).
inline double runs_cond_variance_envelope(const RunsConfig& cfg, int i, int j) {
  const double d = cfg.d, n = cfg.n;
  return 768.0 * std::pow(d, 5) / (n * n * n * std::pow(cfg.p, std::min(i, j)) * std::pow(1.0 - cfg.p, 2));
}

// Envelope 64 d^3 p^{max} / (n^{3/2} p^{(i+j+k)/2} (1-p)^{3/2}) for E|dW_i dW_j dW_k|.
inline double runs_third_envelope(const RunsConfig& cfg, int i, int j, int k) {
  const double d = cfg.d, n = cfg.n;
  return 64.0 * d * d * d * std::pow(cfg.p, std::max({i, j, k})) /
         (std::pow(n, 1.5) * std::pow(cfg.p, 0.5 * (i + j + k)) * std::pow(1.0 - cfg.p, 1.5));
}

// 15 n / d.
inline double runs_lambda_envelope(const RunsConfig& cfg) { return 15.0 * cfg.n / cfg.d; }

// The smooth-function bound assembled from the analytic envelopes (C = 0).
inline BoundReport runs_bound_analytic(const RunsConfig& cfg, HNorms h = {1.0, 1.0, 1.0}) {
  cfg.validate();
  const int d = cfg.d;
  const double lw = runs_lambda_envelope(cfg);
  double a = 0.0, b = 0.0;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) {
      a += lw * std::sqrt(runs_cond_variance_envelope(cfg, i, j));
      for (int k = 1; k <= d; ++k) b += lw * runs_third_envelope(cfg, i, j, k);
    }
  BoundReport r = smooth_bound(Estimate::exact(a), Estimate::exact(b), Estimate::exact(0.0), h, runs_sigma(cfg), d);
  r.lambda_weights = Vector::Constant(d, lw);
  r.provenance = {"A: 768 d^5 conditional-variance envelope", "B: 64 d^3 third-moment envelope",
                  "lambda^(i) <= 15 n / d", "C = 0 (exact linearity)"};
  if (!cfg.meets_independence_radius()) r.provenance.push_back("warning: n < 3d, envelope independence radius not met");
  return r;
}

// The runs coupling as a pair model, on W (standardized) or on V.
class RunsPairModel {
 public:
  using Config = RunsState;

  explicit RunsPairModel(RunsConfig cfg, bool standardized = true) : cfg_(cfg), standardized_(standardized) {
    cfg_.validate();
    scale_ = standardized_ ? runs_scale(cfg_) : Vector::Ones(cfg_.d);
  }

  const RunsConfig& config() const { return cfg_; }
  int dim() const { return cfg_.d; }

  Config sample(Rng& rng) const {
    Config xi(cfg_.n);
    for (auto& b : xi) b = bernoulli(rng, cfg_.p);
    return xi;
  }

  Vector statistic(const Config& xi) const { return runs_v(xi, cfg_).cwiseQuotient(scale_); }
  Config step(const Config& xi, Rng& rng) const { return runs_step(xi, cfg_, rng); }
  Vector drift(const Config& xi) const { return runs_drift(xi, cfg_, standardized_); }

  void for_each_step(const Config& xi, const StepVisitor& fn) const {
    const int nb = 1 << (cfg_.d - 1);
    std::vector<std::uint8_t> fresh(cfg_.d - 1);
    for (int I = 0; I < cfg_.n; ++I)
      for (int b = 0; b < nb; ++b) {
        int ones = 0;
        for (int k = 0; k < cfg_.d - 1; ++k) {
          fresh[k] = (b >> k) & 1;
          ones += fresh[k];
        }
        const double pr = std::pow(cfg_.p, ones) * std::pow(1.0 - cfg_.p, cfg_.d - 1 - ones) / cfg_.n;
        fn(runs_delta_v(xi, cfg_, I, fresh.data()).cwiseQuotient(scale_), pr);
      }
  }

  std::uint64_t config_space_size() const { return cfg_.n >= 64 ? UINT64_MAX : std::uint64_t{1} << cfg_.n; }

  void for_each_config(const ConfigVisitor<RunsPairModel>& fn) const {
    if (cfg_.n > 30) throw InvalidArgument("enumeration limited to n <= 30");
    Config xi(cfg_.n);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << cfg_.n); ++s) {
      for (int k = 0; k < cfg_.n; ++k) xi[k] = (s >> k) & 1u;
      fn(xi, runs_state_probability(xi, cfg_.p));
    }
  }

  std::optional<Matrix> claimed_lambda() const { return runs_lambda(cfg_, standardized_); }

  std::optional<Matrix> claimed_sigma() const {
    const Vector s = standardized_ ? Vector::Ones(cfg_.d) : runs_scale(cfg_);
    return Matrix(s.asDiagonal() * runs_sigma(cfg_).matrix() * s.asDiagonal());
  }

  bool exchangeable() const { return true; }

 private:
  RunsConfig cfg_;
  bool standardized_;
  Vector scale_;
};

}  // namespace steinpairs
