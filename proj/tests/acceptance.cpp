// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "steinpairs/steinpairs.hpp"

using namespace steinpairs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  // Records a failed sub-check; the first few are kept for the summary line.
  void require(bool cond, const std::string& what) {
    if (cond) return;
    if (ok || failures < 3) detail << " [" << what << "]";
    ok = false;
    ++failures;
  }
  int failures = 0;
};

const std::vector<double> kP{0.2, 0.5, 0.8};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

RunsState random_runs_state(int n, double p, Rng& rng) {
  RunsState xi(n);
  for (auto& b : xi) b = bernoulli(rng, p) ? 1 : 0;
  return xi;
}

TestFunction bilinear() {
  TestFunction f;
  f.name = "x1 x2";
  f.dim = 2;
  f.eval = [](const Vector& x) { return x(0) * x(1); };
  f.grad = [](const Vector& x) { return Vector{{x(1), x(0)}}; };
  f.norms = {std::numeric_limits<double>::infinity(), 1.0, 0.0};
  return f;
}

// ---------------------------------------------------------------------------

void runs_oracle(Outcome& o) {
  const auto t0 = Clock::now();
  double worst_sigma = 0.0, worst_cross = 0.0, worst_const = 0.0;
  for (int d : {2, 3})
    for (double p : kP) {
      const SymMatrix ref8 = runs_sigma({8, d, p});
      for (int n : {8, 10, 12}) {
        const RunsConfig cfg{n, d, p};
        const RunsEnumeration e = runs_enumerate_moments(cfg);
        const SymMatrix sigma = runs_sigma(cfg);
        for (int i = 1; i <= d; ++i)
          for (int j = 1; j <= i; ++j) {
            worst_sigma = std::max(worst_sigma, rel(e.second_w(i - 1, j - 1), sigma.matrix()(i - 1, j - 1)));
            worst_cross = std::max(worst_cross, rel(e.second_v(i - 1, j - 1), runs_cross_moment(cfg, i, j)));
            worst_const = std::max(worst_const, rel(sigma.matrix()(i - 1, j - 1), ref8.matrix()(i - 1, j - 1)));
          }
      }
    }
  const double secs = seconds_since(t0);
  o.require(worst_sigma <= 1e-10, "Sigma vs enumeration");
  o.require(worst_cross <= 1e-10, "cross moments vs enumeration");
  o.require(worst_const <= 1e-12, "Sigma differs across n");
  o.require(secs < 60.0, "runtime");
  o.detail << " max rel dev Sigma " << format_number(worst_sigma) << ", E V_iV_j " << format_number(worst_cross)
           << ", across n " << format_number(worst_const) << "; " << format_number(std::round(secs * 10) / 10)
           << " s";
}

void runs_linearity(Outcome& o) {
  Rng rng = make_rng(2, 0xa2);
  double worst = 0.0;
  int configs = 0;
  for (int n : {8, 10, 12, 50})
    for (int d : {2, 3})
      for (double p : kP) {
        const RunsConfig cfg{n, d, p};
        const Matrix lambda = runs_lambda(cfg);
        ++configs;
        for (int k = 0; k < 1000; ++k) {
          const RunsState xi = random_runs_state(n, p, rng);
          const Vector defect = runs_drift(xi, cfg) + lambda * runs_statistic(xi, cfg);
          worst = std::max(worst, defect.cwiseAbs().maxCoeff());
        }
      }
  o.require(worst <= 1e-12, "drift + Lambda W");
  o.detail << " max |drift + Lambda W| " << format_number(worst) << " over " << configs << " x 1000 states";
}

void runs_envelopes(Outcome& o) {
  double var_ratio = 0.0, third_ratio = 0.0, lambda_ratio = 0.0;
  for (int d : {2, 3})
    for (double p : kP) {
      const RunsConfig cfg{10, d, p};
      const Matrix cv = runs_paired_cond_variance(cfg);
      for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
          var_ratio = std::max(var_ratio, cv(i - 1, j - 1) / runs_cond_variance_envelope(cfg, i, j));
      const MomentArray third = third_abs_all(RunsPairModel(cfg), 1000, 3);
      o.require(third.mode == EstimateMode::exact_enumeration, "third moments not enumerated");
      for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
          for (int k = 1; k <= d; ++k) {
            const int f = ((i - 1) * d + (j - 1)) * d + (k - 1);
            third_ratio = std::max(third_ratio, third.value[f] / runs_third_envelope(cfg, i, j, k));
          }
      lambda_ratio =
          std::max(lambda_ratio, lambda_weights(runs_lambda(cfg)).maxCoeff() / runs_lambda_envelope(cfg));
    }
  o.require(var_ratio <= 1.0, "conditional variance envelope");
  o.require(third_ratio <= 1.0, "third moment envelope");
  o.require(lambda_ratio <= 1.0, "lambda^(i) envelope");
  o.detail << " worst value/envelope: cond var " << format_number(var_ratio) << ", third "
           << format_number(third_ratio) << ", lambda^(i) " << format_number(lambda_ratio);
}

void triangular_weights(Outcome& o) {
  Rng rng = make_rng(4, 0xb1);
  int failures = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    const int d = 1 + static_cast<int>(uniform_index(rng, 8));
    const double a = 2.0 * uniform01(rng);
    Matrix l = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      l(i, i) = (0.05 + 2.0 * uniform01(rng)) * (bernoulli(rng, 0.5) ? 1.0 : -1.0);
      for (int j = 0; j < i; ++j) l(i, j) = a * (2.0 * uniform01(rng) - 1.0);
    }
    const double bound = triangular_weight_bound(l, a);
    const double actual = lambda_weights(l).maxCoeff();
    if (actual > bound * (1.0 + 1e-12)) ++failures;
    tightest = std::min(tightest, bound / actual);
  }
  o.require(failures == 0, std::to_string(failures) + " violations");
  o.detail << " 1000 matrices, " << failures << " violations, min bound/max lambda^(i) " << format_number(tightest);
}

void bound_dominance(Outcome& o) {
  const auto t0 = Clock::now();
  constexpr std::size_t kSamples = 1'000'000;
  int checks = 0;
  double worst_slack = -std::numeric_limits<double>::infinity();
  auto record = [&](const std::string& tag, const TestFunction& h, const Estimate& e, double bound) {
    ++checks;
    const double excess = std::abs(e.value) - bound - 4.0 * e.std_error;
    worst_slack = std::max(worst_slack, excess);
    o.require(excess <= 0.0, tag + " " + h.name);
  };
  const IidSumConfig ic{2, 100, SummandLaw::two_point()};
  const Sampler draw = [ic](Rng& rng) { return iid_sample_w(ic, rng); };
  for (const auto& h : battery(2))
    record("iid", h, distance_estimate(draw, SymMatrix::identity(2), h, kSamples, 5), iid_bound(ic, h.norms).total);
  const RunsConfig rc{50, 2, 0.5};
  const RunsPairModel runs(rc);
  const SymMatrix sigma = runs_sigma(rc);
  for (const auto& h : battery(2))
    record("runs", h, distance_estimate(runs, sigma, h, kSamples, 6), runs_bound_analytic(rc, h.norms).total);
  const double secs = seconds_since(t0);
  o.require(secs < 600.0, "runtime");
  o.detail << " " << checks << " (model, h) pairs at 1e6 samples, max |dist| - bound - 4 SE "
           << format_number(worst_slack) << "; " << format_number(std::round(secs)) << " s";
}

void iid_arithmetic(Outcome& o) {
  double worst = 0.0;
  for (const SummandLaw& law : {SummandLaw::two_point(), SummandLaw::bernoulli(0.3), SummandLaw::uniform()})
    for (int d : {1, 2, 5})
      for (int n : {10, 100}) {
        const IidSumConfig c{d, n, law};
        std::vector<HNorms> hs{{1.0, 1.0, 1.0}, {0.0, 0.5, 2.0}};
        if (d >= 2)
          for (const auto& h : battery(d)) hs.push_back(h.norms);
        for (const HNorms& h : hs) {
          const double closed =
              d / std::sqrt(static_cast<double>(n)) *
              (std::sqrt(law.gamma()) / 4.0 * h.h2 + 2.0 * law.beta() / 3.0 * h.h3);
          worst = std::max({worst, rel(iid_bound(c, h).total, closed), rel(iid_bound_formula(c, h), closed)});
        }
      }
  o.require(worst <= 1e-12, "iid bound vs closed form");
  o.detail << " max rel dev " << format_number(worst) << " over three laws";
}

void perm_identities(Outcome& o) {
  double single = 0.0, v0 = 0.0;
  for (int n : {4, 5, 6, 7}) {
    const PermIdentityDefects def = perm_identity_defects(random_perm_tensor(n, 70 + n), 100, 7 + n);
    single = std::max(single, def.single);
    v0 = std::max(v0, def.v0);
  }
  double r1 = 0.0, r2 = 0.0;
  Rng rng = make_rng(7, 0x77);
  for (auto [nx, ny] : {std::pair{3, 3}, std::pair{3, 4}, std::pair{2, 5}}) {
    const PermTensor a = mww_tensor(nx, ny);
    const int n = a.n();
    const double lam = 2.0 / (n - 1);
    const PermIdentityDefects def = perm_identity_defects(a, 50, 17);
    single = std::max(single, def.single);
    v0 = std::max(v0, def.v0);
    for (int k = 0; k < 100; ++k) {
      const Permutation pi = random_permutation(n, rng);
      const PermRemainder rem = perm_remainder(a, pi);
      r1 = std::max(r1, std::abs(rem.r1));
      r2 = std::max(r2, std::abs(rem.r2 + lam / n * perm_v0(a, pi)));
    }
  }
  double var_dev = 0.0;
  std::string vars;
  for (auto [nx, ny] : {std::pair{3, 3}, std::pair{3, 4}}) {
    const PermTensor a = mww_tensor(nx, ny);
    double s = 0, s2 = 0;
    std::uint64_t count = 0;
    for_each_permutation(a.n(), [&](const Permutation& pi) {
      const double v = perm_v0(a, pi);
      s += v;
      s2 += v * v;
      ++count;
    });
    const double var = s2 / count - (s / count) * (s / count);
    var_dev = std::max(var_dev, rel(var, mww_variance(nx, ny)));
    vars += (vars.empty() ? "" : ", ") + format_number(var);
  }
  o.require(single <= 1e-10, "V1/V2 drift");
  o.require(v0 <= 1e-8, "V0 decomposition");
  o.require(r1 <= 1e-12 && r2 <= 1e-12, "MWW remainders");
  o.require(var_dev <= 1e-12, "MWW Var V0");
  o.detail << " drift " << format_number(single) << ", V0 " << format_number(v0) << ", MWW |R1| "
           << format_number(r1) << " |R2 + lambda V0/n| " << format_number(r2) << ", Var V0 at n = 6, 7: " << vars;
}

void hoeffding(Outcome& o) {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = make_rng(seed, 0x40ef);
    Matrix a(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) a(i, j) = standard_normal(rng);
    worst = std::max(worst, rel(hoeffding_variance(a), enumerated_single_variance(a)));
  }
  o.require(worst <= 1e-10, "Hoeffding vs enumeration");
  o.detail << " 20 random 5x5 arrays, max rel dev " << format_number(worst);
}

void spin_chain(Outcome& o) {
  double drift = 0.0, corr_z = 0.0;
  for (int d : {4, 5, 6}) {
    const Matrix lam = spin_chain_lambda(d);
    for (std::uint32_t c = 0; c < (1u << d); ++c) {
      const Spins x = spin_decode(c, d);
      drift = std::max(drift, (spin_chain_drift(x) + lam * spins_vector(x)).cwiseAbs().maxCoeff());
    }
    corr_z = std::max(corr_z, spin_stationary_correlations(d, 100000, 0, 90 + d).max_z());
  }
  constexpr std::size_t kSwap = 100000;
  const double spin_z = moment_swap_test(SpinSumPairModel({4, 10, 0}), kSwap, 91).max_z();
  const double runs_z = moment_swap_test(RunsPairModel({10, 3, 0.5}), kSwap, 92).max_z();
  const double iid_z = moment_swap_test(IidPairModel({2, 100, SummandLaw::two_point()}), kSwap, 93).max_z();
  const double perm_z = moment_swap_test(PermPairModel(random_perm_tensor(8, 94)), kSwap, 95).max_z();
  const double mww_z = moment_swap_test(PermPairModel(mww_tensor(4, 4)), kSwap, 96).max_z();
  o.require(drift <= 1e-12, "spin drift");
  o.require(corr_z <= 5.0, "stationary correlations");
  o.require(spin_z > 4.0, "swap test accepts the spin-sum pair");
  o.require(std::max({runs_z, iid_z, perm_z, mww_z}) <= 4.0, "swap test rejects an exchangeable pair");
  o.detail << " drift " << format_number(drift) << ", corr max z " << format_number(corr_z) << "; swap z: spin-sum "
           << format_number(spin_z) << ", runs " << format_number(runs_z) << ", iid " << format_number(iid_z)
           << ", perm " << format_number(perm_z) << ", mww " << format_number(mww_z);
}

void step_covariances(Outcome& o) {
  constexpr std::size_t kN = 100000;
  const RunsConfig rc{10, 3, 0.5};
  const StepCovariance runs =
      step_covariance(RunsPairModel(rc), runs_lambda(rc), runs_sigma(rc), kN, 101);
  const IidSumConfig ic{2, 100, SummandLaw::two_point()};
  const IidPairModel iid(ic);
  const StepCovariance iidc = step_covariance(iid, *iid.claimed_lambda(), SymMatrix::identity(2), kN, 102);
  const SpinSumPairModel spin({4, 10, 0});
  const StepCovariance spinc = step_covariance(spin, spin.claimed_lambda_matrix(), SymMatrix::identity(4), kN, 103);
  const double zr = runs.max_z(runs.exchangeable_prediction);
  const double zi = iidc.max_z(iidc.exchangeable_prediction);
  const double zs = spinc.max_z(spinc.equal_dist_prediction);
  o.require(zr <= 5.0, "runs");
  o.require(zi <= 5.0, "iid");
  o.require(zs <= 5.0, "spin-sum");
  o.detail << " max z: runs " << format_number(zr) << ", iid " << format_number(zi) << ", spin-sum "
           << format_number(zs);
}

void stein(Outcome& o) {
  const SymMatrix id = SymMatrix::identity(2);
  const Matrix pts = sample_points(id, 10, 111);
  const double lin = stein_residual(stein_solve(coordinate(2, 0), id), pts);
  const double bil = stein_residual(stein_solve(bilinear(), id), pts);
  o.require(std::max(lin, bil) <= 1e-6, "analytic residual");

  const SymMatrix sigma = runs_sigma({10, 2, 0.5});
  const Matrix bpts = sample_points(sigma, 10, 112);
  double battery_res = 0.0, ex1 = -1.0, ex2 = -1.0;
  for (const auto& h : battery(2)) {
    const SteinSolution sol = stein_solve(h, sigma);
    battery_res = std::max(battery_res, stein_residual(sol, bpts));
    const auto ex = stein_derivative_excess(sol, bpts);
    ex1 = std::max(ex1, ex[0]);
    ex2 = std::max(ex2, ex[1]);
  }
  o.require(battery_res <= 1e-3, "battery residual");
  o.require(ex1 <= 1e-3 && ex2 <= 1e-3, "derivative bounds");

  constexpr std::size_t kN = 100000;
  double anti_z = 0.0;
  auto anti = [&](const auto& m, const Matrix& lambda, std::uint64_t seed) {
    const TestFunction g = sine(m.dim(), 0);
    const Estimate e = check_antisymmetry(m, [&](const Vector& w) { return g.grad(w); }, lambda, kN, seed);
    anti_z = std::max(anti_z, std::abs(e.value) / std::max(e.std_error, 1e-12));
    o.require(e.within(0.0, 4.0, 1e-12), "antisymmetry");
  };
  const RunsConfig rc{10, 3, 0.5};
  anti(RunsPairModel(rc), runs_lambda(rc), 113);
  const IidPairModel iid({2, 100, SummandLaw::two_point()});
  anti(iid, *iid.claimed_lambda(), 114);
  anti(PermPairModel(random_perm_tensor(8, 115)), perm_lambda(8), 116);
  anti(PermPairModel(mww_tensor(4, 4)), perm_lambda(8), 117);
  o.detail << " analytic residual " << format_number(std::max(lin, bil)) << ", battery RMS "
           << format_number(battery_res) << ", derivative excess " << format_number(ex1) << " / "
           << format_number(ex2) << ", antisymmetry max z " << format_number(anti_z);
}

void non_smooth(Outcome& o) {
  double worst = 0.0;
  for (double g : {0.5, 1.0, 2.0, 3.7}) {
    const NonSmoothReport r = nonsmooth_bound(0.0, 2.0, 0.0, 1.0, 1, g);
    worst = std::max(worst, rel(r.total, 2.0 * g * g));
  }
  o.require(worst <= 1e-15, "2 gamma^2 example");
  const Vector u = Vector::Unit(2, 0);
  const PsiGrowth g = psi_growth(halfspace_indicator(u, 0.0), u, 0.0, {1e-1, 1e-2, 1e-3});
  o.require(g.log_consistent(2.0), "Psi_t growth");
  o.detail << " 2 gamma^2 rel dev " << format_number(worst) << "; |Psi_t|_2 / log(1/t) ratios";
  for (double r : g.ratio) o.detail << " " << format_number(std::round(r * 1000) / 1000);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"runs covariance oracle", runs_oracle},
      {"runs exact linearity", runs_linearity},
      {"runs moment envelopes", runs_envelopes},
      {"triangular inverse weight bound", triangular_weights},
      {"bound dominance", bound_dominance},
      {"iid bound arithmetic", iid_arithmetic},
      {"permutation identities", perm_identities},
      {"Hoeffding oracle", hoeffding},
      {"spin chain", spin_chain},
      {"step covariance identities", step_covariances},
      {"Stein solver", stein},
      {"non-smooth pipeline", non_smooth},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " exception: " << e.what();
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << k + 1 << ": " << criteria[k].first << " -"
              << o.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
