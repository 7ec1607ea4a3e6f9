#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "steinpairs/linalg.hpp"

namespace steinpairs {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(derive_seed(seed, stream));
}

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// A fresh distribution per call: a cached spare would tie draws to threads.
inline double standard_normal(Rng& rng) { return std::normal_distribution<double>{}(rng); }

// Worker count for sampling loops. Zero means hardware concurrency. Results
// never depend on this value.
struct Parallelism {
  unsigned workers = 0;

  unsigned resolved() const {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return workers == 0 ? hw : workers;
  }
};

enum class EstimateMode { exact_enumeration, monte_carlo };

inline const char* to_string(EstimateMode m) {
  return m == EstimateMode::exact_enumeration ? "exact_enumeration" : "monte_carlo";
}

// A scalar estimate. Exact enumeration always carries a zero standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  EstimateMode mode = EstimateMode::exact_enumeration;
  std::size_t n_effective = 0;
  std::string note;

  static Estimate exact(double v, std::size_t n = 0) { return {v, 0.0, EstimateMode::exact_enumeration, n, {}}; }

  // |value - target| <= k * std_error + floor
  bool within(double target, double k, double floor = 0.0) const {
    return std::abs(value - target) <= k * std_error + floor;
  }
};

inline constexpr int kBatches = 32;

// Per-batch means of a fixed-width record of sample values.
//
// Samples are split into kBatches contiguous batches (fewer when n is small);
// batch b draws from its own stream derived from (seed, b). The split and the
// reduction order are fixed, so output is bit-identical for any worker count.
struct BatchMeans {
  Matrix means;                    // batches x width
  std::vector<std::size_t> sizes;  // samples per batch
  std::size_t n = 0;

  int batches() const { return static_cast<int>(means.rows()); }
  int width() const { return static_cast<int>(means.cols()); }

  Vector overall() const {
    Vector acc = Vector::Zero(width());
    for (int b = 0; b < batches(); ++b) acc += static_cast<double>(sizes[b]) * means.row(b).transpose();
    return acc / static_cast<double>(n);
  }

  // Standard error of the overall mean from the spread of batch means.
  Vector std_error() const {
    const int nb = batches();
    if (nb < 2) return Vector::Zero(width());
    const Vector mu = overall();
    Vector acc = Vector::Zero(width());
    for (int b = 0; b < nb; ++b) acc += (means.row(b).transpose() - mu).cwiseAbs2();
    return (acc / (static_cast<double>(nb) * (nb - 1))).cwiseSqrt();
  }

  Estimate estimate(int column) const {
    return {overall()(column), std_error()(column), EstimateMode::monte_carlo, n, {}};
  }

  // Estimate of g(E record) with a batch-spread standard error.
  template <class G>
  Estimate transformed(G&& g) const {
    const double value = g(overall());
    const int nb = batches();
    double se = 0.0;
    if (nb >= 2) {
      std::vector<double> per(nb);
      double mean = 0.0;
      for (int b = 0; b < nb; ++b) {
        per[b] = g(Vector(means.row(b).transpose()));
        mean += per[b];
      }
      mean /= nb;
      double acc = 0.0;
      for (double v : per) acc += (v - mean) * (v - mean);
      se = std::sqrt(acc / (static_cast<double>(nb) * (nb - 1)));
    }
    return {value, se, EstimateMode::monte_carlo, n, {}};
  }
};

// Runs `n` samples. `sample(rng, out)` adds one record of `width` values into
// `out` (which is zeroed per sample).
template <class F>
BatchMeans monte_carlo(std::size_t n, std::uint64_t seed, int width, F&& sample, Parallelism par = {}) {
  if (n == 0) throw InvalidArgument("sample size must be positive");
  const int nb = static_cast<int>(std::min<std::size_t>(kBatches, n));
  BatchMeans out;
  out.n = n;
  out.means = Matrix::Zero(nb, width);
  out.sizes.resize(nb);
  for (int b = 0; b < nb; ++b) out.sizes[b] = n / nb + (static_cast<std::size_t>(b) < n % nb ? 1 : 0);

  auto run_batch = [&](int b) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b));
    std::vector<double> record(width), acc(width, 0.0);
    for (std::size_t s = 0; s < out.sizes[b]; ++s) {
      std::fill(record.begin(), record.end(), 0.0);
      sample(rng, std::span<double>(record));
      for (int c = 0; c < width; ++c) acc[c] += record[c];
    }
    for (int c = 0; c < width; ++c) out.means(b, c) = acc[c] / static_cast<double>(out.sizes[b]);
  };

  const unsigned workers = std::min<unsigned>(par.resolved(), static_cast<unsigned>(nb));
  if (workers <= 1) {
    for (int b = 0; b < nb; ++b) run_batch(b);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int b = next++; b < nb; b = next++) run_batch(b);
    });
  for (auto& t : pool) t.join();
  return out;
}

using RowTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row ranges of the fixed batch split used by monte_carlo().
inline std::vector<std::size_t> batch_offsets(std::size_t n) {
  const std::size_t nb = std::min<std::size_t>(kBatches, n);
  std::vector<std::size_t> off(nb + 1, 0);
  for (std::size_t b = 0; b < nb; ++b) off[b + 1] = off[b] + n / nb + (b < n % nb ? 1 : 0);
  return off;
}

// Fills an n x width table; fill(rng, row_pointer) writes one row. Rows of
// batch b are drawn from stream b, so the table is independent of workers.
template <class F>
RowTable collect_rows(std::size_t n, std::uint64_t seed, int width, F&& fill, Parallelism par = {});

// Deterministic parallel map over [0, count): fn(index) writes its own slot.
template <class F>
void parallel_for(std::size_t count, F&& fn, Parallelism par = {}) {
  const unsigned workers = std::min<std::size_t>(par.resolved(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

template <class F>
RowTable collect_rows(std::size_t n, std::uint64_t seed, int width, F&& fill, Parallelism par) {
  if (n == 0) throw InvalidArgument("sample size must be positive");
  RowTable out = RowTable::Zero(static_cast<Eigen::Index>(n), width);
  const auto off = batch_offsets(n);
  parallel_for(
      off.size() - 1,
      [&](std::size_t b) {
        Rng rng = make_rng(seed, b);
        for (std::size_t r = off[b]; r < off[b + 1]; ++r) fill(rng, out.row(static_cast<Eigen::Index>(r)).data());
      },
      par);
  return out;
}

// Batch means of a column-wise function already evaluated per row.
inline BatchMeans batch_means_of(const RowTable& rows) {
  const std::size_t n = static_cast<std::size_t>(rows.rows());
  const auto off = batch_offsets(n);
  BatchMeans bm;
  bm.n = n;
  bm.means = Matrix::Zero(static_cast<Eigen::Index>(off.size() - 1), rows.cols());
  bm.sizes.resize(off.size() - 1);
  for (std::size_t b = 0; b + 1 < off.size(); ++b) {
    bm.sizes[b] = off[b + 1] - off[b];
    bm.means.row(b) = rows.middleRows(off[b], bm.sizes[b]).colwise().mean();
  }
  return bm;
}

}  // namespace steinpairs
