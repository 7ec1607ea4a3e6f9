#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "steinpairs/config.hpp"
#include "steinpairs/linalg.hpp"
#include "steinpairs/montecarlo.hpp"
#include "steinpairs/report.hpp"

using namespace steinpairs;
using Catch::Approx;

namespace {

Matrix random_spd(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = standard_normal(rng);
  return a * a.transpose() + 0.1 * Matrix::Identity(d, d);
}

}  // namespace

// ---------------------------------------------------------------- linalg

TEST_CASE("psd_sqrt of identity and diagonal matrices", "[linalg]") {
  CHECK(psd_sqrt(SymMatrix::identity(3)).matrix().isApprox(Matrix::Identity(3, 3), 1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const Matrix r = psd_sqrt(SymMatrix(d)).matrix();
  CHECK(r(0, 0) == Approx(2.0).margin(1e-14));
  CHECK(r(1, 1) == Approx(3.0).margin(1e-14));
  CHECK(std::abs(r(0, 1)) < 1e-14);
}

TEST_CASE("psd_sqrt reconstructs a random SPD matrix", "[linalg]") {
  const Matrix s = random_spd(4, 7);
  const Matrix r = psd_sqrt(SymMatrix(s)).matrix();
  CHECK((r * r - s).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(min_eigenvalue(SymMatrix(r)) >= 0.0);
}

TEST_CASE("psd_sqrt clamps round-off negatives and rejects indefinite input", "[linalg]") {
  Matrix s{{1.0, 1.0}, {1.0, 1.0}};
  const Matrix r = psd_sqrt(SymMatrix(s)).matrix();
  CHECK((r * r - s).cwiseAbs().maxCoeff() <= 1e-12);
  Matrix bad{{1.0, 0.0}, {0.0, -0.5}};
  CHECK_THROWS_AS(psd_sqrt(SymMatrix(bad)), NotPSD);
  CHECK_THROWS_AS(require_psd(SymMatrix(bad)), NotPSD);
}

TEST_CASE("SymMatrix rejects asymmetric input", "[linalg]") {
  Matrix a{{1.0, 0.5}, {0.4, 1.0}};
  CHECK_THROWS_AS(SymMatrix(a), Nonsymmetric);
  CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), InvalidArgument);
}

TEST_CASE("inverse_sqrt and SingularSigma", "[linalg]") {
  const Matrix s = random_spd(3, 11);
  const Matrix is = inverse_sqrt(SymMatrix(s)).matrix();
  CHECK((is * s * is - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-10);
  Matrix sing{{1.0, 1.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(inverse_sqrt(SymMatrix(sing)), SingularSigma);
  CovarianceModel cm{SymMatrix(sing)};
  CHECK_FALSE(cm.full_rank());
  CHECK_THROWS_AS(cm.inverse_sqrt(), SingularSigma);
}

TEST_CASE("invert: closed-form 2x2 and triangular inverse", "[linalg]") {
  CHECK(invert(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4)));
  const Matrix l = Matrix{{1.0, 0.0}, {-1.0, 2.0}} / 10.0;
  const Matrix expect = 10.0 * Matrix{{1.0, 0.0}, {0.5, 0.5}};
  CHECK((invert(l) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  Matrix t{{1.0, 0.0, 0.0}, {0.3, 1.0, 0.0}, {-2.0, 0.7, 1.0}};
  CHECK((invert(t) * t - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(invert(Matrix::Zero(2, 2)), Singular);
  CHECK_THROWS_AS(invert(Matrix{{1.0, 2.0}, {2.0, 4.0}}), Singular);
}

TEST_CASE("matrix norms", "[linalg]") {
  CHECK(norms(Matrix::Zero(2, 2)).maxabs == 0.0);
  CHECK(norms(Matrix::Zero(2, 2)).induced_one == 0.0);
  CHECK(norms(Matrix::Identity(3, 3)).maxabs == 1.0);
  CHECK(norms(Matrix::Identity(3, 3)).induced_one == 1.0);
  const auto n = norms(Matrix{{1.0, -2.0}, {3.0, 0.0}});
  CHECK(n.maxabs == 3.0);
  CHECK(n.induced_one == 4.0);
}

// ----------------------------------------------------------- monte carlo

TEST_CASE("monte_carlo is independent of the worker count", "[montecarlo]") {
  auto draw = [](Rng& rng, std::span<double> out) {
    const double z = standard_normal(rng);
    out[0] = z;
    out[1] = z * z;
  };
  const BatchMeans a = monte_carlo(10007, 5, 2, draw, Parallelism{1});
  const BatchMeans b = monte_carlo(10007, 5, 2, draw, Parallelism{4});
  CHECK(a.means == b.means);
  CHECK(a.sizes == b.sizes);
  CHECK(a.n == 10007);
  CHECK(a.estimate(0).within(0.0, 5.0));
  CHECK(a.estimate(1).within(1.0, 5.0));
}

TEST_CASE("monte_carlo standard error tracks 1/sqrt(n)", "[montecarlo]") {
  auto draw = [](Rng& rng, std::span<double> out) { out[0] = uniform01(rng); };
  const Estimate e = monte_carlo(64000, 3, 1, draw).estimate(0);
  const double expected = std::sqrt(1.0 / 12.0 / 64000.0);
  CHECK(e.std_error == Approx(expected).epsilon(0.5));
  CHECK(e.mode == EstimateMode::monte_carlo);
}

TEST_CASE("constant samples have zero standard error", "[montecarlo]") {
  const Estimate e = monte_carlo(1000, 1, 1, [](Rng&, std::span<double> out) { out[0] = 2.5; }).estimate(0);
  CHECK(e.value == 2.5);
  CHECK(e.std_error == 0.0);
  CHECK_THROWS_AS(monte_carlo(0, 1, 1, [](Rng&, std::span<double>) {}), InvalidArgument);
}

TEST_CASE("collect_rows and batch_means_of agree with monte_carlo", "[montecarlo]") {
  auto fill = [](Rng& rng, double* out) { out[0] = standard_normal(rng); };
  const RowTable rows = collect_rows(5000, 9, 1, fill, Parallelism{3});
  const BatchMeans bm = batch_means_of(rows);
  const BatchMeans direct = monte_carlo(5000, 9, 1, [](Rng& rng, std::span<double> out) { out[0] = standard_normal(rng); });
  CHECK((bm.means - direct.means).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("derived seeds differ by stream", "[montecarlo]") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  Rng a = make_rng(4, 2), b = make_rng(4, 2);
  CHECK(a() == b());
}

// ---------------------------------------------------------------- report

TEST_CASE("number formatting", "[report]") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(2.5) == "2.5");
  CHECK(format_number(1e-5) == "1e-05");
  CHECK(format_number(-3e-7) == "-3e-07");
  CHECK(format_number(0.001) == "0.001");
  CHECK(format_number(std::nan("")) == "nan");
  for (double x : {0.1, 1.0 / 3.0, 1e-9, 12345.678, -2.0e20}) CHECK(parse_number(format_number(x)) == x);
  CHECK_THROWS_AS(parse_number("1.5x"), InvalidArgument);
}

TEST_CASE("empty report emits the header only", "[report]") {
  const Report r;
  CHECK(report_string(r, Format::csv) == "check,value,std_error,reference_value,tolerance,verdict,reference\n");
  CHECK(report_string(r, Format::jsonl).empty());
}

TEST_CASE("csv output round-trips", "[report]") {
  Report r;
  r.exact("exact, with \"quotes\"", 1.0 / 3.0, 1.0 / 3.0, 1e-12, "runs covariance");
  r.within("mc", Estimate{0.01, 3e-3, EstimateMode::monte_carlo, 10, {}}, 0.0, 4.0, "antisymmetry");
  r.at_most("bound", 0.5, 0.01, 1.0, 4.0, "bound dominance");
  r.info("note", std::numeric_limits<double>::infinity());
  r.flag("failing", false, "exchangeability");
  const Report back = parse_csv_report(report_string(r, Format::csv));
  REQUIRE(back.rows.size() == r.rows.size());
  for (std::size_t k = 0; k < r.rows.size(); ++k) CHECK(back.rows[k] == r.rows[k]);
  CHECK(r.failures() == 1);
  CHECK_FALSE(r.all_pass());
}

TEST_CASE("every row carries a reference tag", "[report]") {
  Report r;
  r.info("x", 1.0);
  r.exact("y", 1.0, 1.0, 0.0, "runs covariance");
  for (const auto& row : r.rows) CHECK_FALSE(row.reference.empty());
  CHECK(r.rows[0].reference == "plumbing");
}

TEST_CASE("report verdicts", "[report]") {
  Report r;
  CHECK(r.exact("a", 1.0 + 1e-13, 1.0, 1e-12, "t").verdict == Verdict::pass);
  CHECK(r.exact("b", 1.1, 1.0, 1e-12, "t").verdict == Verdict::fail);
  CHECK(r.within("c", Estimate{1.0, 0.1, EstimateMode::monte_carlo, 1, {}}, 1.35, 4.0, "t").verdict == Verdict::pass);
  CHECK(r.at_most("d", 2.0, 0.0, 1.0, 4.0, "t").verdict == Verdict::fail);
  CHECK(r.at_least("e", 5.0, 4.0, "t").verdict == Verdict::pass);
}

TEST_CASE("jsonl rows carry numeric values in column order", "[report]") {
  Report r;
  r.exact("a", 0.5, 0.5, 1e-12, "t");
  const std::string line = report_string(r, Format::jsonl);
  CHECK(line.rfind("{\"check\":\"a\",\"value\":0.5,\"std_error\":0.0", 0) == 0);
  CHECK(line.find("\"verdict\":\"PASS\",\"reference\":\"t\"}") != std::string::npos);
}

TEST_CASE("sweep columns", "[report]") {
  std::ostringstream os;
  emit_sweep({{100, 0.2, 0.01, 1e-5}}, os);
  CHECK(os.str() == "n,bound,distance,std_error\n100,0.2,0.01,1e-05\n");
}

TEST_CASE("write_report reports unwritable paths", "[report]") {
  CHECK_THROWS_AS(write_report(Report{}, Format::csv, "/nonexistent-dir/x.csv"), IoError);
}

// ---------------------------------------------------------------- config

TEST_CASE("config serialization round-trips", "[config]") {
  ExperimentConfig c;
  c.model = "perm";
  c.suites = {Suite::identities, Suite::oracles};
  c.seed = 77;
  c.samples = 1234;
  c.out = "out.csv";
  c.format = Format::jsonl;
  c.enumerate = false;
  c.workers = 3;
  c.n = 7;
  c.d = 3;
  c.p = 0.2;
  c.law = "bernoulli";
  c.q = 0.3;
  c.n_x = 4;
  c.n_y = 5;
  c.tensor_file = "t.txt";
  c.gamma_d = 1.5;
  c.c0 = 0.25;
  c.a_const = 2.0;
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config(serialize_config(ExperimentConfig{})) == ExperimentConfig{});
}

TEST_CASE("config parsing reports line and field", "[config]") {
  try {
    parse_config("seed = 3\n# comment\nsamples = lots\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(e.field() == "samples");
  }
  CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("model = nope\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text\n"), ConfigError);
}

TEST_CASE("validation names the offending field", "[config]") {
  ExperimentConfig c = parse_config("p = 1.5\n");
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "p");
    CHECK(std::string(e.what()).find("'p'") != std::string::npos);
  }
  c = ExperimentConfig{};
  c.a_const = 0.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("later values override earlier ones", "[config]") {
  ExperimentConfig base;
  base.seed = 9;
  ExperimentConfig c = parse_config("seed = 4\nn = 12\n", base);
  CHECK(c.seed == 4);
  set_config_value(c, "seed", "5");
  CHECK(c.seed == 5);
  CHECK(c.n == 12);
}
