#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steinpairs/bounds.hpp"
#include "steinpairs/config.hpp"
#include "steinpairs/distance.hpp"
#include "steinpairs/estimators.hpp"
#include "steinpairs/iid_sum.hpp"
#include "steinpairs/pair_checks.hpp"
#include "steinpairs/perm.hpp"
#include "steinpairs/report.hpp"
#include "steinpairs/runs.hpp"
#include "steinpairs/spin_chain.hpp"
#include "steinpairs/test_functions.hpp"

namespace steinpairs {

namespace detail {

inline std::string idx(int i, int j) { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; }

inline std::size_t scaled(std::size_t samples, double f, std::size_t floor = 1000) {
  return std::max<std::size_t>(floor, static_cast<std::size_t>(static_cast<double>(samples) * f));
}

// Max |drift + Lambda W| over `count` sampled configurations.
template <PairModel M>
double max_linearity_defect(const M& m, const Matrix& lambda, int count, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x11ea);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto c = m.sample(rng);
    worst = std::max(worst, (drift_at(m, c) + lambda * Vector(m.statistic(c))).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Step covariance, moment swap and antisymmetry rows shared by exchangeable models.
template <PairModel M>
void exchangeable_rows(Report& r, const std::string& tag, const M& m, const Matrix& lambda, const SymMatrix& sigma,
                       const ExperimentConfig& cfg, Parallelism par) {
  const StepCovariance sc = step_covariance(m, lambda, sigma, cfg.samples, cfg.seed + 11, par);
  r.at_most(tag + " E(dW dW^t) vs 2 Sigma Lambda^t, max z", sc.max_z(sc.exchangeable_prediction), 0.0, 5.0, 0.0,
            "step covariance identity");
  const SwapTest sw = moment_swap_test(m, cfg.samples, cfg.seed + 12, par);
  r.at_most(tag + " moment swap test, max z", sw.max_z(), 0.0, 4.0, 0.0, "exchangeability");
  const TestFunction g = sine(m.dim(), 0);
  const Estimate anti = check_antisymmetry(
      m, [&](const Vector& w) { return g.grad(w); }, lambda, cfg.samples, cfg.seed + 13, par);
  r.within(tag + " E F(W',W) for g = sin(x1)", anti, 0.0, 4.0, "antisymmetry");
}

}  // namespace detail

inline SummandLaw law_of(const ExperimentConfig& cfg) {
  if (cfg.law == "bernoulli") return SummandLaw::bernoulli(cfg.q);
  if (cfg.law == "uniform") return SummandLaw::uniform();
  return SummandLaw::two_point();
}

inline Report runs_suite(const ExperimentConfig& cfg) {
  const RunsConfig rc{cfg.n, cfg.d, cfg.p};
  rc.validate();
  const Parallelism par{cfg.workers};
  const RunsPairModel m(rc);
  const Matrix lambda = runs_lambda(rc);
  const SymMatrix sigma = runs_sigma(rc);
  const std::string tag = "runs";
  Report r;
  if (cfg.suites.count(Suite::linearity)) {
    r.exact(tag + " max |drift + Lambda W| over 1000 states", detail::max_linearity_defect(m, lambda, 1000, cfg.seed),
            0.0, 1e-12, "runs linearity, R = 0");
    LinearityOptions lo;
    lo.par = par;
    const LinearityFit fit = estimate_linearity(m, detail::scaled(cfg.samples, 0.2), cfg.seed + 1, lo);
    r.flag(tag + " fitted Lambda within 5 SE of the closed form", fit.matches_claim(5.0, 1e-10), "runs Lambda");
  }
  if (cfg.suites.count(Suite::identities)) detail::exchangeable_rows(r, tag, m, lambda, sigma, cfg, par);
  if (cfg.suites.count(Suite::oracles) && cfg.enumerate && rc.n <= 20) {
    const RunsEnumeration e = runs_enumerate_moments(rc, par);
    const double dev = (e.second_w - sigma.matrix()).cwiseAbs().maxCoeff() / sigma.matrix().cwiseAbs().maxCoeff();
    r.exact(tag + " Sigma vs enumeration, max relative deviation", dev, 0.0, 1e-10, "runs covariance");
    double worst = 0.0;
    for (int i = 1; i <= rc.d; ++i)
      for (int j = 1; j <= i; ++j) {
        const double ref = runs_cross_moment(rc, i, j);
        worst = std::max(worst, std::abs(e.second_v(i - 1, j - 1) - ref) / std::abs(ref));
      }
    r.exact(tag + " E V_i V_j vs enumeration, max relative deviation", worst, 0.0, 1e-10, "runs cross moments");
    if (rc.n <= 12) {
      const Matrix cv = runs_paired_cond_variance(rc);
      for (int i = 1; i <= rc.d; ++i)
        for (int j = 1; j <= rc.d; ++j)
          r.at_most(tag + " Var E(dW_i dW_j | fine) " + detail::idx(i, j), cv(i - 1, j - 1), 0.0,
                    runs_cond_variance_envelope(rc, i, j), 0.0, "runs variance envelope");
      EstimatorOptions eo;
      eo.par = par;
      const MomentArray third = third_abs_all(m, cfg.samples, cfg.seed + 2, eo);
      for (int i = 1; i <= rc.d; ++i)
        for (int j = 1; j <= rc.d; ++j)
          for (int k = 1; k <= rc.d; ++k) {
            const int f = ((i - 1) * rc.d + (j - 1)) * rc.d + (k - 1);
            r.at_most(tag + " E|dW_i dW_j dW_k| (" + std::to_string(i) + "," + std::to_string(j) + "," +
                          std::to_string(k) + ")",
                      third.value[f], third.std_error[f], runs_third_envelope(rc, i, j, k), 4.0,
                      "runs third-moment envelope");
          }
    }
    r.at_most(tag + " max lambda^(i)", lambda_weights(lambda).maxCoeff(), 0.0, runs_lambda_envelope(rc), 0.0,
              "runs lambda envelope");
  }
  if (cfg.suites.count(Suite::bounds)) {
    const BoundReport analytic = runs_bound_analytic(rc);
    r.info(tag + " analytic bound, unit norms", analytic.total, 0.0, "smooth-function bound");
    TermOptions to;
    to.par = par;
    to.force_monte_carlo = !cfg.enumerate;
    const TheoremTerms tt = theorem_terms(m, lambda, cfg.samples, cfg.seed + 3, to);
    r.at_most(tag + " estimated A vs analytic A", tt.A.value, tt.A.std_error, analytic.A.value, 4.0,
              "runs variance envelope");
    r.at_most(tag + " estimated B vs analytic B", tt.B.value, tt.B.std_error, analytic.B.value, 4.0,
              "runs third-moment envelope");
    r.info(tag + " estimated C", tt.C.value, tt.C.std_error, "runs linearity, R = 0");
  }
  if (cfg.suites.count(Suite::distances)) {
    DistanceOptions dopt;
    dopt.par = par;
    for (const auto& h : battery(rc.d)) {
      const Estimate e = distance_estimate(m, sigma, h, cfg.samples, cfg.seed + 4, dopt);
      r.at_most(tag + " |Eh(W) - Eh(Z)| " + h.name, std::abs(e.value), e.std_error,
                runs_bound_analytic(rc, h.norms).total, 4.0, "smooth-function bound");
    }
  }
  return r;
}

inline Report iid_suite(const ExperimentConfig& cfg) {
  const IidSumConfig ic{cfg.d, cfg.n, law_of(cfg)};
  ic.validate();
  const Parallelism par{cfg.workers};
  const IidPairModel m(ic);
  const Matrix lambda = *m.claimed_lambda();
  const SymMatrix sigma(Matrix::Identity(ic.d, ic.d));
  const std::string tag = "iid";
  Report r;
  if (cfg.suites.count(Suite::linearity)) {
    r.exact(tag + " max |drift + Lambda W| over 1000 configurations",
            detail::max_linearity_defect(m, lambda, 1000, cfg.seed), 0.0, 1e-12, "iid linearity, R = 0");
    LinearityOptions lo;
    lo.par = par;
    lo.force_inner = true;
    const LinearityFit fit = estimate_linearity(m, detail::scaled(cfg.samples, 0.05), cfg.seed + 1, lo);
    r.flag(tag + " fitted Lambda within 5 SE of Id/(dn)", fit.matches_claim(5.0, 1e-12), "iid Lambda");
  }
  if (cfg.suites.count(Suite::identities)) {
    detail::exchangeable_rows(r, tag, m, lambda, sigma, cfg, par);
    if (ic.d >= 2) {
      Rng rng = make_rng(cfg.seed, 0x3d);
      double worst = 0.0;
      for (int k = 0; k < 1000; ++k) {
        const Matrix x = m.sample(rng);
        const Vector dw = m.statistic(m.step(x, rng)) - m.statistic(x);
        for (int i = 0; i < ic.d; ++i)
          for (int j = 0; j < ic.d; ++j)
            if (i != j) worst = std::max(worst, std::abs(dw(i) * dw(j)));
      }
      r.exact(tag + " max |dW_i dW_j|, i != j", worst, 0.0, 0.0, "iid cross moments vanish");
    }
  }
  if (cfg.suites.count(Suite::oracles)) {
    for (const SummandLaw law : {SummandLaw::two_point(), SummandLaw::bernoulli(cfg.q), SummandLaw::uniform()}) {
      const LawMoments mm = numeric_moments(law);
      r.exact(tag + " beta closed form vs moments, " + law.name(), law.beta(), mm.abs_third, 1e-10, "iid moments");
      r.exact(tag + " gamma closed form vs moments, " + law.name(), law.gamma(), mm.var_square, 1e-10,
              "iid moments");
    }
  }
  if (cfg.suites.count(Suite::bounds)) {
    const HNorms unit{1.0, 1.0, 1.0};
    r.exact(tag + " bound assembled vs closed form, unit norms", iid_bound(ic, unit).total,
            iid_bound_formula(ic, unit), 1e-12, "iid bound");
  }
  if (cfg.suites.count(Suite::distances) && ic.d >= 2) {
    DistanceOptions dopt;
    dopt.par = par;
    const Sampler draw = [ic](Rng& rng) { return iid_sample_w(ic, rng); };
    for (const auto& h : battery(ic.d)) {
      const Estimate e = distance_estimate(draw, sigma, h, cfg.samples, cfg.seed + 4, dopt);
      r.at_most(tag + " |Eh(W) - Eh(Z)| " + h.name, std::abs(e.value), e.std_error, iid_bound(ic, h.norms).total,
                4.0, "iid bound");
    }
  }
  return r;
}

// A random tensor with a_{i,i,k,l} = 0 for k != l and total sum zero.
inline PermTensor random_perm_tensor(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x7e5);
  const std::size_t n4 = static_cast<std::size_t>(n) * n * n * n;
  std::vector<double> a(n4, 0.0);
  auto at = [n](int i, int j, int k, int l) { return ((static_cast<std::size_t>(i) * n + j) * n + k) * n + l; };
  double total = 0.0;
  std::size_t free_entries = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          if (i == j && k != l) continue;
          a[at(i, j, k, l)] = standard_normal(rng);
          total += a[at(i, j, k, l)];
          ++free_entries;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (!(i == j && k != l)) a[at(i, j, k, l)] -= total / static_cast<double>(free_entries);
  return PermTensor::dense(n, std::move(a));
}

struct PermIdentityDefects {
  double single = 0.0;  // max |E(V_i' - V_i) + lambda V_i|, i = 1, 2
  double v0 = 0.0;      // max |E(V0' - V0) - lambda(-(2n-1)/n V0 + V1 + V2) - R1 - R2|
  double printed_v0 = 0.0;
};

inline PermIdentityDefects perm_identity_defects(const PermTensor& a, int count, std::uint64_t seed) {
  const int n = a.n();
  const double lam = 2.0 / (n - 1);
  Rng rng = make_rng(seed, 0x9e);
  PermIdentityDefects out;
  for (int k = 0; k < count; ++k) {
    const Permutation pi = random_permutation(n, rng);
    const PermStats v = perm_stats(a, pi);
    const Vector drift = perm_drift(a, pi);
    out.single = std::max({out.single, std::abs(drift(1) + lam * v.v1), std::abs(drift(2) + lam * v.v2)});
    const PermRemainder rem = perm_remainder(a, pi);
    const double linear = lam * (-(2.0 * n - 1.0) / n * v.v0 + v.v1 + v.v2);
    out.v0 = std::max(out.v0, std::abs(drift(0) - linear - rem.total()));
    out.printed_v0 = std::max(out.printed_v0, std::abs(drift(0) - linear - rem.printed_r1 - rem.printed_r2));
  }
  return out;
}

inline Report perm_suite(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  const Parallelism par{cfg.workers};
  const PermTensor a = cfg.tensor_file.empty() ? random_perm_tensor(n, cfg.seed) : read_perm_tensor(cfg.tensor_file);
  const PermPairModel m(a);
  const std::string tag = "perm";
  Report r;
  if (cfg.suites.count(Suite::identities)) {
    const PermIdentityDefects def = perm_identity_defects(a, 100, cfg.seed);
    r.exact(tag + " max |E(V_i' - V_i) + lambda V_i|, i = 1,2", def.single, 0.0, 1e-10, "permutation drift");
    r.exact(tag + " V0 drift decomposition, max defect", def.v0, 0.0, 1e-8, "permutation V0 decomposition");
    r.info(tag + " V0 decomposition with the textbook remainder, max defect", def.printed_v0);
    const SwapTest sw = moment_swap_test(m, cfg.samples, cfg.seed + 12, par);
    r.at_most(tag + " moment swap test, max z", sw.max_z(), 0.0, 4.0, 0.0, "exchangeability");
    const TestFunction g = sine(3, 0);
    const Estimate anti = check_antisymmetry(
        m, [&](const Vector& w) { return g.grad(w); }, perm_lambda(a.n()), cfg.samples, cfg.seed + 13, par);
    r.within(tag + " E F(W',W) for g = sin(x1)", anti, 0.0, 4.0, "antisymmetry");
  }
  if (cfg.suites.count(Suite::oracles) && cfg.enumerate) {
    // Large tensors are checked on a random n = 5 array instead.
    const PermTensor o = a.n() <= 8 ? a : random_perm_tensor(5, cfg.seed + 14);
    const std::string otag = a.n() <= 8 ? tag : tag + " (n = 5 array)";
    r.exact(otag + " Var V1 Hoeffding vs enumeration", hoeffding_variance(o.a1()),
            enumerated_single_variance(o.a1()), 1e-10, "Hoeffding variance");
  }
  if (cfg.suites.count(Suite::linearity)) {
    LinearityOptions lo;
    lo.par = par;
    const LinearityFit fit = estimate_linearity(m, detail::scaled(cfg.samples, 0.05), cfg.seed + 1, lo);
    for (int i = 1; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        r.within(tag + " fitted Lambda" + detail::idx(i + 1, k + 1),
                 Estimate{fit.lambda_hat(i, k), fit.standard_errors(i, k), EstimateMode::monte_carlo, fit.n_samples},
                 perm_lambda(a.n())(i, k), 5.0, "permutation Lambda");
  }
  return r;
}

inline Report mww_suite(const ExperimentConfig& cfg) {
  const PermTensor a = mww_tensor(cfg.n_x, cfg.n_y);
  const int n = a.n();
  const double lam = 2.0 / (n - 1);
  const std::string tag = "mww";
  Report r;
  if (cfg.suites.count(Suite::identities)) {
    Rng rng = make_rng(cfg.seed, 0x3a);
    double r1 = 0.0, r2 = 0.0, u = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Permutation pi = random_permutation(n, rng);
      const PermRemainder rem = perm_remainder(a, pi);
      const double v0 = perm_v0(a, pi);
      r1 = std::max(r1, std::abs(rem.r1));
      r2 = std::max(r2, std::abs(rem.r2 + lam / n * v0));
      u = std::max(u, std::abs(v0 - (mww_pair_count(cfg.n_x, pi) - cfg.n_x * cfg.n_y / 2.0)));
    }
    r.exact(tag + " max |R1|", r1, 0.0, 1e-12, "MWW remainder");
    r.exact(tag + " max |R2 + (lambda/n) V0|", r2, 0.0, 1e-12, "MWW remainder");
    r.exact(tag + " max |V0 - (U - n_x n_y / 2)|", u, 0.0, 1e-12, "MWW statistic");
    const PermIdentityDefects def = perm_identity_defects(a, 50, cfg.seed + 1);
    r.exact(tag + " max |E(V_i' - V_i) + lambda V_i|, i = 1,2", def.single, 0.0, 1e-10, "permutation drift");
    r.exact(tag + " V0 drift decomposition, max defect", def.v0, 0.0, 1e-8, "permutation V0 decomposition");
  }
  if (cfg.suites.count(Suite::oracles) && cfg.enumerate && n <= 10) {
    double s = 0, s2 = 0;
    std::uint64_t count = 0;
    for_each_permutation(n, [&](const Permutation& pi) {
      const double v = perm_v0(a, pi);
      s += v;
      s2 += v * v;
      ++count;
    });
    const double var = s2 / count - (s / count) * (s / count);
    r.exact(tag + " Var V0 enumeration vs n_x n_y (n+1)/12", var, mww_variance(cfg.n_x, cfg.n_y), 1e-12,
            "MWW variance");
    r.exact(tag + " Var V1 Hoeffding vs enumeration", hoeffding_variance(a.a1()), enumerated_single_variance(a.a1()),
            1e-10, "Hoeffding variance");
  }
  if (cfg.suites.count(Suite::bounds))
    r.info(tag + " Var V1 / n^3 (Hoeffding)", hoeffding_variance(a.a1()) / std::pow(n, 3));
  return r;
}

inline Report spin_suite(const ExperimentConfig& cfg) {
  SpinChainConfig sc{std::max(cfg.d, 4), cfg.n, 0};
  sc.validate();
  const Parallelism par{cfg.workers};
  const SpinSumPairModel m(sc);
  const Matrix lambda = m.claimed_lambda_matrix();
  const std::string tag = "spin";
  Report r;
  if (cfg.suites.count(Suite::identities)) {
    Rng rng = make_rng(cfg.seed, 0x5e);
    const Matrix lam1 = spin_chain_lambda(sc.d);
    double drift = 0.0, prod = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Spins x = uniform_spins(sc.d, rng);
      drift = std::max(drift, (spin_chain_drift(x) + lam1 * spins_vector(x)).cwiseAbs().maxCoeff());
      const Matrix cp = spin_conditional_products(x);
      for (int i = 0; i < sc.d; ++i)
        for (int j = 0; j < sc.d; ++j)
          if (i != j) prod = std::max(prod, std::abs(cp(i, j) - spin_product_formula(x, i, j)));
    }
    r.exact(tag + " single-state drift vs -Lambda X", drift, 0.0, 1e-12, "spin chain drift");
    r.exact(tag + " conditional products vs three-term formula", prod, 0.0, 1e-12, "spin chain products");
    r.exact(tag + " column-sum defect of the transition matrix", spin_doubly_stochastic_defect(sc.d), 0.0, 1e-12,
            "spin chain equilibrium");
    const SpinCorrelations corr = spin_stationary_correlations(sc.d, 100000, 0, cfg.seed + 1, par);
    r.at_most(tag + " stationary cross-correlations, max z", corr.max_z(), 0.0, 5.0, 0.0, "spin chain uncorrelated");
    const StepCovariance cov = step_covariance(m, lambda, SymMatrix(Matrix::Identity(sc.d, sc.d)), cfg.samples,
                                               cfg.seed + 2, par);
    r.at_most(tag + " E(dW dW^t) vs Lambda Sigma + Sigma Lambda^t, max z", cov.max_z(cov.equal_dist_prediction), 0.0,
              5.0, 0.0, "equal-distribution covariance identity");
    const SwapTest sw = moment_swap_test(m, cfg.samples, cfg.seed + 3, par);
    r.at_least(tag + " moment swap test rejects exchangeability, max z", sw.max_z(), 4.0, "non-exchangeable pair");
    r.at_least(tag + " max |sigma_tilde(Lambda, Id) - Id|",
               (sigma_tilde(spin_chain_lambda(sc.d), SymMatrix(Matrix::Identity(sc.d, sc.d))).matrix() -
                Matrix::Identity(sc.d, sc.d))
                   .cwiseAbs()
                   .maxCoeff(),
               0.01, "non-exchangeable pair");
  }
  if (cfg.suites.count(Suite::linearity)) {
    LinearityOptions lo;
    lo.par = par;
    const LinearityFit fit = estimate_linearity(m, detail::scaled(cfg.samples, 0.2), cfg.seed + 4, lo);
    r.flag(tag + " fitted Lambda within 5 SE of Lambda/n", fit.matches_claim(5.0, 1e-12), "spin-sum Lambda");
  }
  return r;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  try {
    if (cfg.model == "runs") return runs_suite(cfg);
    if (cfg.model == "iidsum") return iid_suite(cfg);
    if (cfg.model == "perm") return perm_suite(cfg);
    if (cfg.model == "mww") return mww_suite(cfg);
    if (cfg.model == "spinchain") return spin_suite(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(0, "model", cfg.model + ": " + e.what());
  }
  throw ConfigError(0, "model", "unknown model '" + cfg.model + "'");
}

// Stein solver and smoothing checks on the battery.
inline Report stein_suite(const ExperimentConfig& cfg, const SymMatrix& sigma) {
  Report r;
  const int d = sigma.dim();
  const Parallelism par{cfg.workers};
  const Matrix pts = sample_points(sigma, 20, cfg.seed);
  for (const auto& h : battery(d)) {
    r.at_most("certified norms, worst sampled excess " + h.name, certification_excess(h, 200, cfg.seed), 0.0, 1e-4,
              0.0, "battery certification");
    const SteinSolution sol = stein_solve(h, sigma);
    r.at_most("Stein residual RMS " + h.name, stein_residual(sol, pts, par), 0.0, 1e-3, 0.0, "Stein equation");
    const auto ex = stein_derivative_excess(sol, pts);
    r.at_most("|df| - |h|_1 " + h.name, ex[0], 0.0, 1e-3, 0.0, "Stein solution derivatives");
    r.at_most("|d2f| - |h|_2/2 " + h.name, ex[1], 0.0, 1e-3, 0.0, "Stein solution derivatives");
  }
  const TestFunction ind = halfspace_indicator(Vector::Unit(d, 0), 0.0);
  const PsiGrowth g = psi_growth(ind, Vector::Unit(d, 0), 0.0, {1e-1, 1e-2, 1e-3});
  for (std::size_t k = 0; k < g.t.size(); ++k)
    r.info("|Psi_t|_2 at t = " + format_number(g.t[k]), g.norm2[k], 0.0, "smoothing growth");
  double worst = 0.0;
  for (double x : g.ratio) worst = std::max({worst, x, 1.0 / x});
  r.at_most("|Psi_t|_2 / log(1/t) ratio spread", worst, 0.0, 2.0, 0.0, "smoothing growth");
  return r;
}

// Theorem-level arithmetic on user-supplied terms.
inline Report bound_suite(const ExperimentConfig& cfg, double A, double B, double C, int d) {
  Report r;
  const NonSmoothReport ex = nonsmooth_bound(0.0, 2.0, 0.0, 1.0, 1, cfg.gamma_d);
  r.exact("non-smooth bound, A'=0 B'=2 C'=0 a=1", ex.total, 2.0 * cfg.gamma_d * cfg.gamma_d, 1e-15,
          "non-smooth bound arithmetic");
  if (A > 0 || B > 0 || C > 0) {
    const NonSmoothReport ns = nonsmooth_bound(A, B, C, cfg.a_const, d, cfg.gamma_d);
    r.info("non-smooth bound D'", ns.D_prime);
    r.info("non-smooth bound T'", ns.T_prime);
    r.info("non-smooth bound total", ns.total, 0.0, "non-smooth bound");
  }
  return r;
}

// Bound and distance against n for i.i.d. sums, for plotting.
inline std::vector<SweepPoint> iid_sweep(const ExperimentConfig& cfg, const std::vector<int>& ns,
                                         std::size_t h_index = 2) {
  std::vector<SweepPoint> pts;
  const Parallelism par{cfg.workers};
  for (int n : ns) {
    const IidSumConfig ic{cfg.d, n, law_of(cfg)};
    const auto bat = battery(ic.d);
    const TestFunction& h = bat.at(h_index);
    const Sampler draw = [ic](Rng& rng) { return iid_sample_w(ic, rng); };
    const Estimate e =
        distance_estimate(draw, SymMatrix(Matrix::Identity(ic.d, ic.d)), h, cfg.samples, cfg.seed, {false, par});
    pts.push_back({n, iid_bound(ic, h.norms).total, e.value, e.std_error});
  }
  return pts;
}

}  // namespace steinpairs
