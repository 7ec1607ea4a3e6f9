#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/pair_model.hpp"

namespace steinpairs {

// Four-index array a_{i,j,k,l}, 0 <= i,j,k,l < n, with the two marginals
//   a1_{s,t} = (1/n) sum_{i,j} a_{s,i,t,j},  a2_{s,t} = (1/n) sum_{i,j} a_{i,s,j,t}.
// Dense storage is capped at n <= 32; structured cases are rules with
// closed-form marginals.
class PermTensor {
 public:
  using Rule = std::function<double(int, int, int, int)>;
  static constexpr int kDenseMax = 32;

  static PermTensor dense(int n, std::vector<double> entries) {
    if (n < 2 || n > kDenseMax) throw InvalidArgument("dense tensors need 2 <= n <= 32");
    const std::size_t n4 = static_cast<std::size_t>(n) * n * n * n;
    if (entries.size() != n4) throw InvalidArgument("dense tensor needs n^4 entries");
    PermTensor t;
    t.n_ = n;
    t.name_ = "dense";
    t.data_ = std::make_shared<std::vector<double>>(std::move(entries));
    const auto data = t.data_;
    t.rule_ = [data, n](int i, int j, int k, int l) {
      return (*data)[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
    };
    t.a1_ = Matrix::Zero(n, n);
    t.a2_ = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double v = t.rule_(i, j, k, l);
            t.a1_(i, k) += v;
            t.a2_(j, l) += v;
          }
    t.a1_ /= n;
    t.a2_ /= n;
    t.validate();
    return t;
  }

  static PermTensor from_rule(int n, Rule rule, Matrix a1, Matrix a2, std::string name) {
    if (n < 2) throw InvalidArgument("tensor size must be at least 2");
    if (a1.rows() != n || a1.cols() != n || a2.rows() != n || a2.cols() != n)
      throw InvalidArgument("marginals must be n x n");
    PermTensor t;
    t.n_ = n;
    t.rule_ = std::move(rule);
    t.a1_ = std::move(a1);
    t.a2_ = std::move(a2);
    t.name_ = std::move(name);
    t.validate();
    return t;
  }

  int n() const { return n_; }
  const std::string& name() const { return name_; }
  bool is_dense() const { return static_cast<bool>(data_); }
  double operator()(int i, int j, int k, int l) const { return rule_(i, j, k, l); }
  const Matrix& a1() const { return a1_; }
  const Matrix& a2() const { return a2_; }

  // sum_{ijkl} a_{ijkl} = n sum a1.
  double total() const { return n_ * a1_.sum(); }

  // Zero rule a_{i,i,k,l} = 0 for k != l (checked exhaustively up to n = 32)
  // and the centering sum a = 0.
  void validate(double tol = 1e-10) const {
    if (n_ <= kDenseMax) {
      for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l)
            if (k != l && std::abs(rule_(i, i, k, l)) > tol)
              throw InvalidArgument("a_{i,i,k,l} must vanish for k != l (i=" + std::to_string(i) + ")");
    }
    const double scale = std::max(1.0, n_ * a1_.cwiseAbs().sum());
    if (std::abs(total()) > tol * scale)
      throw InvalidArgument("tensor entries must sum to zero (sum = " + std::to_string(total()) + ")");
    if (std::abs(a1_.sum() - a2_.sum()) > tol * scale) throw InvalidArgument("marginals disagree on the total");
  }

 private:
  PermTensor() = default;

  int n_ = 0;
  Rule rule_;
  Matrix a1_, a2_;
  std::string name_;
  std::shared_ptr<std::vector<double>> data_;
};

using Permutation = std::vector<int>;  // 0-based images pi(0..n-1)

inline Permutation identity_permutation(int n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

inline Permutation random_permutation(int n, Rng& rng) {
  Permutation p = identity_permutation(n);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[uniform_index(rng, static_cast<std::size_t>(i) + 1)]);
  return p;
}

inline void check_permutation(const Permutation& pi, int n) {
  if (static_cast<int>(pi.size()) != n) throw InvalidArgument("permutation length differs from n");
  std::vector<bool> seen(n, false);
  for (int v : pi) {
    if (v < 0 || v >= n || seen[v]) throw InvalidArgument("not a permutation");
    seen[v] = true;
  }
}

struct PermStats {
  double v0 = 0, v1 = 0, v2 = 0;

  Vector vector() const { return Vector{{v0, v1, v2}}; }
};

inline double perm_v0(const PermTensor& a, const Permutation& pi) {
  const int n = a.n();
  double v = 0.0;
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) v += a(s, t, pi[s], pi[t]);
  return v;
}

inline double single_stat(const Matrix& a, const Permutation& pi) {
  double v = 0.0;
  for (int s = 0; s < static_cast<int>(pi.size()); ++s) v += a(s, pi[s]);
  return v;
}

inline PermStats perm_stats(const PermTensor& a, const Permutation& pi) {
  return {perm_v0(a, pi), single_stat(a.a1(), pi), single_stat(a.a2(), pi)};
}

inline Permutation perm_step_at(const Permutation& pi, int I, int J) {
  const int n = static_cast<int>(pi.size());
  if (I == J || I < 0 || J < 0 || I >= n || J >= n) throw InvalidArgument("need two distinct positions");
  Permutation out = pi;
  std::swap(out[I], out[J]);
  return out;
}

// Transposition of a uniform unordered pair I != J.
inline Permutation perm_step(const Permutation& pi, Rng& rng) {
  const std::size_t n = pi.size();
  if (n < 2) throw InvalidArgument("need n >= 2");
  const int I = static_cast<int>(uniform_index(rng, n));
  int J = static_cast<int>(uniform_index(rng, n - 1));
  if (J >= I) ++J;
  return perm_step_at(pi, I, J);
}

// V0(pi') - V0(pi) for pi' = pi with positions I, J swapped; O(n).
inline double perm_delta_v0(const PermTensor& a, const Permutation& pi, int I, int J) {
  const int n = a.n();
  auto img = [&](int s, bool swapped) { return !swapped ? pi[s] : (s == I ? pi[J] : s == J ? pi[I] : pi[s]); };
  double d = 0.0;
  for (int s : {I, J})
    for (int t = 0; t < n; ++t) d += a(s, t, img(s, true), img(t, true)) - a(s, t, pi[s], pi[t]);
  for (int t : {I, J})
    for (int s = 0; s < n; ++s) {
      if (s == I || s == J) continue;
      d += a(s, t, pi[s], img(t, true)) - a(s, t, pi[s], pi[t]);
    }
  return d;
}

inline double single_delta(const Matrix& a, const Permutation& pi, int I, int J) {
  return -a(I, pi[I]) - a(J, pi[J]) + a(I, pi[J]) + a(J, pi[I]);
}

// lambda [[(2n-1)/n, -1, -1], [0, 1, 0], [0, 0, 1]] with lambda = 2/(n-1).
inline Matrix perm_lambda(int n) {
  if (n < 2) throw InvalidArgument("need n >= 2");
  const double lam = 2.0 / (n - 1);
  Matrix l{{(2.0 * n - 1.0) / n, -1.0, -1.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  return lam * l;
}

// Remainder of the V0 drift beyond lambda(-(2n-1)/n V0 + V1 + V2).
//
// r1 and r2 are the exact pieces; printed_r1 and printed_r2 evaluate the
// textbook forms lambda sum a^pi_{iiii} - (lambda/n) sum a_{iijj} and
// -(lambda/n) sum a_{i,j,pi(j),pi(i)}, which do not close the identity for a
// general tensor and are kept for comparison only.
struct PermRemainder {
  double r1 = 0, r2 = 0;
  double printed_r1 = 0, printed_r2 = 0;

  double total() const { return r1 + r2; }
};

inline PermRemainder perm_remainder(const PermTensor& a, const Permutation& pi) {
  const int n = a.n();
  const double lam = 2.0 / (n - 1);
  double diag_pi = 0, diag_const = 0, left = 0, right = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    diag_pi += a(i, i, pi[i], pi[i]);
    for (int j = 0; j < n; ++j) {
      diag_const += a(i, i, j, j);
      left += a(i, j, pi[i], pi[i]);
      right += a(i, j, pi[j], pi[j]);
      cross += a(i, j, pi[j], pi[i]);
    }
  }
  PermRemainder r;
  r.r1 = lam * (1.0 - 2.0 / n) * diag_pi + lam / n * (diag_const - left - right);
  r.r2 = lam / n * cross;
  r.printed_r1 = lam * diag_pi - lam / n * diag_const;
  r.printed_r2 = -lam / n * cross;
  return r;
}

// Exact E[(V0,V1,V2)' - (V0,V1,V2) | pi] over all n(n-1)/2 transpositions.
inline Vector perm_drift(const PermTensor& a, const Permutation& pi) {
  const int n = a.n();
  Vector acc = Vector::Zero(3);
  for (int I = 0; I < n; ++I)
    for (int J = I + 1; J < n; ++J) {
      acc(0) += perm_delta_v0(a, pi, I, J);
      acc(1) += single_delta(a.a1(), pi, I, J);
      acc(2) += single_delta(a.a2(), pi, I, J);
    }
  return acc * (2.0 / (static_cast<double>(n) * (n - 1)));
}

// Mann-Whitney-Wilcoxon tensor: +1/2 when i < n_x <= j and k < l, -1/2 when
// i < n_x <= j and l < k (0-based). V0 = U - n_x n_y / 2.
inline PermTensor mww_tensor(int n_x, int n_y) {
  if (n_x < 1 || n_y < 1) throw InvalidArgument("sample sizes must be positive");
  const int n = n_x + n_y;
  auto rule = [n_x](int i, int j, int k, int l) {
    if (i >= n_x || j < n_x || k == l) return 0.0;
    return k < l ? 0.5 : -0.5;
  };
  Matrix a1 = Matrix::Zero(n, n), a2 = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      const double t1 = t + 1.0;  // 1-based rank
      if (s < n_x) a1(s, t) = n_y * (n - 2.0 * t1 + 1.0) / (2.0 * n);
      if (s >= n_x) a2(s, t) = n_x * (2.0 * t1 - n - 1.0) / (2.0 * n);
    }
  return PermTensor::from_rule(n, rule, std::move(a1), std::move(a2), "mww");
}

// Mann-Whitney count of pairs (x_i, y_j) with rank(x_i) < rank(y_j).
inline double mww_pair_count(int n_x, const Permutation& ranks) {
  double u = 0;
  for (int i = 0; i < n_x; ++i)
    for (int j = n_x; j < static_cast<int>(ranks.size()); ++j) u += ranks[i] < ranks[j];
  return u;
}

inline double mww_variance(int n_x, int n_y) { return n_x * n_y * (n_x + n_y + 1.0) / 12.0; }

// a_{ijkl} = b_{ij} c_{kl}.
inline PermTensor product_tensor(const Matrix& b, const Matrix& c) {
  const int n = static_cast<int>(b.rows());
  if (b.cols() != n || c.rows() != n || c.cols() != n) throw InvalidArgument("factors must be n x n");
  const Vector br = b.rowwise().sum(), bc = b.colwise().sum().transpose();
  const Vector cr = c.rowwise().sum(), cc = c.colwise().sum().transpose();
  Matrix a1 = br * cr.transpose() / n;
  Matrix a2 = bc * cc.transpose() / n;
  auto rule = [b, c](int i, int j, int k, int l) { return b(i, j) * c(k, l); };
  return PermTensor::from_rule(n, rule, std::move(a1), std::move(a2), "product");
}

// (1/(n-1)) sum_ij (a_ij - a_i. - a_.j + a_..)^2: the variance of
// sum_i a_{i,pi(i)} under a uniform permutation.
inline double hoeffding_variance(const Matrix& a) {
  require_square(a, "array");
  const int n = static_cast<int>(a.rows());
  if (n < 2) throw InvalidArgument("need n >= 2");
  const Vector row = a.rowwise().mean(), col = a.colwise().mean().transpose();
  const double all = a.mean();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double c = a(i, j) - row(i) - col(j) + all;
      s += c * c;
    }
  return s / (n - 1);
}

// Visits all n! permutations in lexicographic order.
template <class F>
void for_each_permutation(int n, F&& fn) {
  if (n < 1 || n > 12) throw InvalidArgument("permutation enumeration limited to n <= 12");
  Permutation p = identity_permutation(n);
  do fn(static_cast<const Permutation&>(p));
  while (std::next_permutation(p.begin(), p.end()));
}

inline std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Exact variance of sum_i a_{i,pi(i)} by enumeration.
inline double enumerated_single_variance(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  double s = 0, s2 = 0;
  std::uint64_t count = 0;
  for_each_permutation(n, [&](const Permutation& p) {
    const double v = single_stat(a, p);
    s += v;
    s2 += v * v;
    ++count;
  });
  const double mean = s / count;
  return s2 / count - mean * mean;
}

// Reads "i j k l value" records (1-based); '#' starts a comment. An optional
// "n <size>" line fixes the size, otherwise the largest index is used.
inline PermTensor read_perm_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  struct Rec {
    int i, j, k, l;
    double v;
  };
  std::vector<Rec> recs;
  int n = 0, declared = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    if (first == "n") {
      if (!(ss >> declared)) throw IoError(path + ":" + std::to_string(lineno) + ": bad size line");
      continue;
    }
    Rec r{};
    std::istringstream all(line);
    if (!(all >> r.i >> r.j >> r.k >> r.l >> r.v))
      throw IoError(path + ":" + std::to_string(lineno) + ": expected i j k l value");
    if (std::min({r.i, r.j, r.k, r.l}) < 1) throw IoError(path + ":" + std::to_string(lineno) + ": indices are 1-based");
    n = std::max({n, r.i, r.j, r.k, r.l});
    recs.push_back(r);
  }
  if (declared) {
    if (declared < n) throw IoError(path + ": index exceeds declared size");
    n = declared;
  }
  if (n < 2) throw IoError(path + ": tensor has fewer than two indices");
  if (n > PermTensor::kDenseMax) throw IoError(path + ": dense tensors are limited to n <= 32");
  std::vector<double> data(static_cast<std::size_t>(n) * n * n * n, 0.0);
  for (const auto& r : recs)
    data[((static_cast<std::size_t>(r.i - 1) * n + (r.j - 1)) * n + (r.k - 1)) * n + (r.l - 1)] += r.v;
  return PermTensor::dense(n, std::move(data));
}

// W = n^{-3/2} (V0, V1, V2) under the transposition coupling.
class PermPairModel {
 public:
  using Config = Permutation;

  explicit PermPairModel(PermTensor a) : a_(std::move(a)), scale_(std::pow(a_.n(), -1.5)) {}

  const PermTensor& tensor() const { return a_; }
  int dim() const { return 3; }
  double scale() const { return scale_; }

  Config sample(Rng& rng) const { return random_permutation(a_.n(), rng); }
  Config step(const Config& pi, Rng& rng) const { return perm_step(pi, rng); }
  Vector statistic(const Config& pi) const { return scale_ * perm_stats(a_, pi).vector(); }
  Vector drift(const Config& pi) const { return scale_ * perm_drift(a_, pi); }

  void for_each_step(const Config& pi, const StepVisitor& fn) const {
    const int n = a_.n();
    const double pr = 2.0 / (static_cast<double>(n) * (n - 1));
    Vector dw(3);
    for (int I = 0; I < n; ++I)
      for (int J = I + 1; J < n; ++J) {
        dw << perm_delta_v0(a_, pi, I, J), single_delta(a_.a1(), pi, I, J), single_delta(a_.a2(), pi, I, J);
        fn(scale_ * dw, pr);
      }
  }

  std::uint64_t config_space_size() const { return a_.n() > 20 ? UINT64_MAX : factorial(a_.n()); }

  void for_each_config(const ConfigVisitor<PermPairModel>& fn) const {
    const double pr = 1.0 / static_cast<double>(factorial(a_.n()));
    for_each_permutation(a_.n(), [&](const Permutation& p) { fn(p, pr); });
  }

  std::optional<Matrix> claimed_lambda() const { return perm_lambda(a_.n()); }
  bool exchangeable() const { return true; }

 private:
  PermTensor a_;
  double scale_;
};

}  // namespace steinpairs
