#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "entroherd/data.hpp"
#include "entroherd/errors.hpp"
#include "entroherd/numeric.hpp"
#include "test_support.hpp"

using namespace entroherd;

namespace {

const char* kHeader =
    "\"fixed acidity\";\"volatile acidity\";\"citric acid\";\"residual sugar\";"
    "\"chlorides\";\"free sulfur dioxide\";\"total sulfur dioxide\";\"density\";"
    "\"pH\";\"sulphates\";\"alcohol\";\"quality\"";
const char* kRow = "6.3;0.594;0.45;2.5;0.072;7;77;0.9979;3.38;0.91;11.4;8";

std::string fixture(const char* name) {
  return std::string(ENTROHERD_FIXTURES) + "/" + name;
}

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::vector<std::string>& lines, std::string p = "tmp_wine_test.csv")
      : path(std::move(p)) {
    std::ofstream out(path);
    for (const std::string& l : lines) out << l << "\n";
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("wine loader parses, transforms and annotates the fixture") {
  const Dataset d = load_wine_csv(fixture("winequality-red.csv"));
  REQUIRE(d.variables.size() == 11);
  REQUIRE(d.n() == 50);
  CHECK(d.variables[0] == "fixed acidity");
  CHECK(d.variables[10] == "alcohol");
  // log10 applies to citric acid, residual sugar, chlorides and both
  // sulfur dioxide columns (indices 2..6), nothing else.
  for (int i = 0; i < 11; ++i) {
    CHECK(d.preprocessing[static_cast<std::size_t>(i)].log10_applied == (i >= 2 && i <= 6));
  }
  CHECK(d.preprocessing[2].zero_substitutions == 3);
  for (int i = 0; i < 11; ++i) {
    if (i != 2) CHECK(d.preprocessing[static_cast<std::size_t>(i)].zero_substitutions == 0);
  }
  // First fixture row: raw columns pass through, logged columns transform.
  CHECK(d.rows[0][0] == 6.3);
  CHECK(d.rows[0][2] == doctest::Approx(std::log10(0.45)).epsilon(1e-14));
  CHECK(d.rows[0][5] == doctest::Approx(std::log10(7.0)).epsilon(1e-14));
  CHECK(d.rows[0][7] == 0.9979);
  // Zero citric acid becomes exactly -5 and is counted.
  int subs = 0;
  for (const Point& r : d.rows) {
    if (r[2] == -5.0) ++subs;
  }
  CHECK(subs == 3);
}

TEST_CASE("wine loader rejects malformed files") {
  CHECK_THROWS_AS(load_wine_csv("no_such_file.csv"), DataError);

  SUBCASE("missing column") {
    TempCsv f({"\"fixed acidity\";\"volatile acidity\";\"quality\"", "6.3;0.594;8"});
    CHECK_THROWS_AS(load_wine_csv(f.path), MissingColumn);
  }
  SUBCASE("non-numeric cell") {
    std::string bad = kRow;
    bad.replace(bad.find("0.594"), 5, "oops!");
    TempCsv f({kHeader, kRow, bad});
    CHECK_THROWS_AS(load_wine_csv(f.path), NonNumericCell);
  }
  SUBCASE("value far outside the documented range") {
    std::string bad = kRow;
    bad.replace(0, 3, "100");
    TempCsv f({kHeader, kRow, bad});
    CHECK_THROWS_AS(load_wine_csv(f.path), RangeSanityFail);
  }
  SUBCASE("zero chlorides cannot be log-transformed") {
    std::string bad = kRow;
    bad.replace(bad.find("0.072"), 5, "0.000");
    TempCsv f({kHeader, kRow, bad});
    CHECK_THROWS_AS(load_wine_csv(f.path), RangeSanityFail);
  }
  SUBCASE("no data rows") {
    TempCsv f({kHeader});
    CHECK_THROWS_AS(load_wine_csv(f.path), EmptyData);
  }
}

TEST_CASE("train/validation split z-scores from the train part only") {
  const Dataset d = load_wine_csv(fixture("winequality-red.csv"));
  const SplitResult s1 = split_train_validation(d, 0.2, 7);
  CHECK(s1.validation.n() == 10);
  CHECK(s1.train.n() == 40);
  const SplitResult s2 = split_train_validation(d, 0.2, 7);
  for (std::size_t r = 0; r < 40; ++r) CHECK(s1.train.rows[r] == s2.train.rows[r]);
  const SplitResult s3 = split_train_validation(d, 0.2, 8);
  bool differs = false;
  for (std::size_t r = 0; r < 10; ++r) {
    differs = differs || s1.validation.rows[r] != s3.validation.rows[r];
  }
  CHECK(differs);

  // Train columns are exactly standardized; both parts share the statistics.
  for (int j = 0; j < 11; ++j) {
    std::vector<double> col;
    for (const Point& r : s1.train.rows) col.push_back(r[static_cast<std::size_t>(j)]);
    CHECK(std::abs(mean_of(col)) < 1e-10);
    CHECK(population_std(col) == doctest::Approx(1.0).epsilon(1e-10));
    const VariableLog& tr = s1.train.preprocessing[static_cast<std::size_t>(j)];
    const VariableLog& va = s1.validation.preprocessing[static_cast<std::size_t>(j)];
    CHECK(tr.z_mean == va.z_mean);
    CHECK(tr.z_std == va.z_std);
    CHECK(tr.z_std > 0.0);
  }
}

TEST_CASE("auc counts pairwise wins with half credit for ties") {
  CHECK(auc({2.0, 3.0}, {1.0, 2.0}) == doctest::Approx(0.875).epsilon(1e-14));
  CHECK(auc({5.0, 6.0}, {1.0, 2.0}) == doctest::Approx(1.0));
  CHECK(auc({1.0, 1.0}, {1.0, 1.0}) == doctest::Approx(0.5));
  CHECK(auc({1.0}, {2.0}) == doctest::Approx(0.0));
}

TEST_CASE("quantile coverage is the fraction of truths inside their interval") {
  const std::vector<std::pair<double, double>> iv{{0.0, 1.0}, {0.0, 1.0}, {2.0, 3.0}};
  CHECK(quantile_coverage(iv, {0.5, 5.0, 2.5}) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(quantile_coverage(iv, {0.5, 0.5, 2.5}) == doctest::Approx(1.0));
}

TEST_CASE("the spin-glass instance has the documented chain structure") {
  const GibbsModel m = make_boltzmann_instance(10, 3);
  REQUIRE(m.theta.size() == 45);
  CHECK(m.features.size() == 45);
  CHECK(m.domain.size() == 1024);

  // Pair (i, j), i < j, lives at offset j - i - 1 within block i.
  auto idx = [](int i, int j) {
    int off = 0;
    for (int k = 0; k < i; ++k) off += 9 - k;
    return off + (j - i - 1);
  };
  for (int i = 0; i + 1 < 10; ++i) {
    if (i == 3) {
      CHECK(m.theta[static_cast<std::size_t>(idx(3, 4))] == 0.0);
    } else {
      CHECK(m.theta[static_cast<std::size_t>(idx(i, i + 1))] == -0.3);
    }
  }
  // Off-chain couplings are N(0, 0.2^2/10) draws: small but not all zero.
  std::vector<double> off;
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 2; j < 10; ++j) off.push_back(m.theta[static_cast<std::size_t>(idx(i, j))]);
  }
  REQUIRE(off.size() == 36);
  const double sd = population_std(off);
  CHECK(sd > 0.02);
  CHECK(sd < 0.11);

  // Probabilities normalize; determinism in the seed.
  double total = 0.0;
  for (double p : m.prob) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  const GibbsModel m2 = make_boltzmann_instance(10, 3);
  CHECK(m2.theta == m.theta);
  const GibbsModel m3 = make_boltzmann_instance(10, 4);
  CHECK(m3.theta != m.theta);
}

TEST_CASE("metropolis sampling of the double well matches quadrature moments") {
  const BimodalTarget target;
  // Reference moments by quadrature on [-4, 4].
  const double z = std::exp(target.log_z());
  const double mean =
      integrate([&](double x) { return x * std::exp(target.log_unnorm(x)); }, -4.0, 4.0) / z;
  const double second =
      integrate([&](double x) { return x * x * std::exp(target.log_unnorm(x)); }, -4.0, 4.0) /
      z;

  const std::vector<double> s = mh_sample_bimodal(400000, 1);
  REQUIRE(s.size() == 400000);
  const std::vector<double> s2 = mh_sample_bimodal(400000, 1);
  CHECK(s == s2);

  double m1 = 0.0, m2 = 0.0;
  for (double x : s) {
    m1 += x;
    m2 += x * x;
  }
  m1 /= 400000.0;
  m2 /= 400000.0;
  CHECK(std::abs(m1 - mean) < 0.06);
  CHECK(std::abs(m2 - second) < 0.06);
  // log_pdf integrates to one over the support.
  const double mass =
      integrate([&](double x) { return std::exp(target.log_pdf(x)); }, -4.0, 4.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("dense gaussian baseline reproduces 2-d closed forms") {
  const std::vector<Point> rows{{0.0, 0.0}, {2.0, 1.0}, {1.0, 3.0}, {4.0, 2.0}, {3.0, 4.0}};
  // Population moments by hand.
  double mx = 0.0, my = 0.0;
  for (const Point& r : rows) {
    mx += r[0] / 5.0;
    my += r[1] / 5.0;
  }
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Point& r : rows) {
    sxx += (r[0] - mx) * (r[0] - mx) / 5.0;
    syy += (r[1] - my) * (r[1] - my) / 5.0;
    sxy += (r[0] - mx) * (r[1] - my) / 5.0;
  }
  const MvnModel mvn(rows);
  CHECK(mvn.dim() == 2);
  const double det = sxx * syy - sxy * sxy;
  const Point x{1.5, 2.5};
  const double dx = x[0] - mx, dy = x[1] - my;
  const double quad = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;
  const double expect = -0.5 * quad - 0.5 * std::log(det) - std::log(2.0 * 3.14159265358979324);
  CHECK(mvn.log_density(x) == doctest::Approx(expect).epsilon(1e-10));

  // Conditional of coordinate 0 given coordinate 1.
  const auto [cm, cs] = mvn.conditional_univariate(0, x);
  CHECK(cm == doctest::Approx(mx + sxy / syy * (x[1] - my)).epsilon(1e-10));
  CHECK(cs == doctest::Approx(std::sqrt(sxx - sxy * sxy / syy)).epsilon(1e-10));
}

TEST_CASE("normal quantile inverts the normal cdf") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
  for (double p : {0.01, 0.2, 0.5, 0.8, 0.99}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}
