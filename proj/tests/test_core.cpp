#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "entroherd/errors.hpp"
#include "entroherd/kv.hpp"
#include "entroherd/numeric.hpp"
#include "entroherd/rng.hpp"

using namespace entroherd;

TEST_CASE("rng streams are deterministic in (seed, name, instance)") {
  RngStream a(42, "jump", 7);
  RngStream b(42, "jump", 7);
  for (int i = 0; i < 32; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng streams with different names or instances diverge") {
  RngStream base(42, "jump", 0);
  RngStream other_name(42, "sample", 0);
  RngStream other_inst(42, "jump", 1);
  RngStream other_seed(43, "jump", 0);
  const std::uint64_t v = base.next_u64();
  CHECK(v != other_name.next_u64());
  CHECK(v != other_inst.next_u64());
  CHECK(v != other_seed.next_u64());
}

TEST_CASE("rng uniform stays in [0,1) and is roughly flat") {
  RngStream r(1, "test");
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
  RngStream r2(1, "test");
  for (int i = 0; i < 1000; ++i) {
    const double u = r2.uniform(-2.0, 5.0);
    REQUIRE(u >= -2.0);
    REQUIRE(u < 5.0);
  }
}

TEST_CASE("rng uniform_int is unbiased across residues") {
  RngStream r(3, "test");
  const std::uint64_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = r.uniform_int(n);
    REQUIRE(v < n);
    ++counts[v];
  }
  // 5 sigma on a binomial(70000, 1/7) count.
  const double expect = draws / 7.0;
  const double sd = std::sqrt(expect * (1.0 - 1.0 / 7.0));
  for (int c : counts) CHECK(std::abs(c - expect) < 5.0 * sd);
}

TEST_CASE("rng normal has the right first two moments") {
  RngStream r(5, "test");
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.03);
}

TEST_CASE("kv parses comments, blanks and embedded spaces") {
  const KeyValueConfig c = KeyValueConfig::parse(
      "# header comment\n"
      "alpha = 1.5\n"
      "\n"
      "name =  two words  \n"
      "count=7\n"
      "flag = on\n");
  CHECK(c.has("alpha"));
  CHECK(c.get_double("alpha") == doctest::Approx(1.5));
  CHECK(c.get_string("name") == "two words");
  CHECK(c.get_int("count") == 7);
  CHECK(c.get_bool("flag"));
  CHECK_FALSE(c.has("missing"));
  CHECK(c.get_double("missing", 9.0) == 9.0);
}

TEST_CASE("kv typed getters throw ConfigError naming the key") {
  const KeyValueConfig c = KeyValueConfig::parse("word = hello\n");
  CHECK_THROWS_AS(c.get_double("word"), ConfigError);
  CHECK_THROWS_AS(c.get_int("word"), ConfigError);
  CHECK_THROWS_AS(c.get_bool("word"), ConfigError);
  CHECK_THROWS_AS(c.get_string("absent"), ConfigError);
  try {
    c.get_double("word");
    FAIL("expected a throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("word") != std::string::npos);
  }
}

TEST_CASE("kv serialize/parse round trip preserves exact doubles") {
  KeyValueConfig c;
  c.set_double("third", 1.0 / 3.0);
  c.set_double("tiny", std::ldexp(1.0, -52));
  c.set_double("big", 12345.6789);
  c.set_int("n", -42);
  c.set_bool("b", false);
  const KeyValueConfig back = KeyValueConfig::parse(c.serialize());
  CHECK(back.get_double("third") == 1.0 / 3.0);
  CHECK(back.get_double("tiny") == std::ldexp(1.0, -52));
  CHECK(back.get_double("big") == 12345.6789);
  CHECK(back.get_int("n") == -42);
  CHECK_FALSE(back.get_bool("b"));
}

TEST_CASE("kv double lists") {
  const KeyValueConfig c = KeyValueConfig::parse("xs = 1, 2.5, -3\n");
  const std::vector<double> xs = c.get_double_list("xs");
  REQUIRE(xs.size() == 3);
  CHECK(xs[0] == 1.0);
  CHECK(xs[1] == 2.5);
  CHECK(xs[2] == -3.0);
  const KeyValueConfig bad = KeyValueConfig::parse("xs = 1, two\n");
  CHECK_THROWS_AS(bad.get_double_list("xs"), ConfigError);
}

TEST_CASE("log_sum_exp handles scale, -inf and empty input") {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v{std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(v) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
  std::vector<double> with_ninf{-inf, 0.0};
  CHECK(log_sum_exp(with_ninf) == doctest::Approx(0.0));
  std::vector<double> all_ninf{-inf, -inf};
  CHECK(log_sum_exp(all_ninf) == -inf);
  std::vector<double> empty;
  CHECK(log_sum_exp(empty) == -inf);
}

TEST_CASE("compensated sum keeps digits a plain sum loses") {
  CompensatedSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(-1e100);
  CHECK(s.value() == 1.0);

  CompensatedSum t;
  const int n = 100000;
  for (int i = 0; i < n; ++i) t.add(0.1);
  CHECK(std::abs(t.value() - n * 0.1) < 1e-9);
}

TEST_CASE("integrate matches known integrals") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::sin(x); }, 0.0, 3.14159265358979323846,
                  1e-12) == doctest::Approx(2.0).epsilon(1e-10));
  const double z = integrate(
      [](double x) { return std::exp(normal_log_pdf(x, 0.0, 1.0)); }, -8.0, 8.0, 1e-12);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mean and population std") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(v) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(population_std(v) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("spearman on monotone data and ties") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> up{2.0, 4.0, 9.0, 100.0};
  std::vector<double> down{5.0, 1.0, 0.5, -2.0};
  CHECK(spearman(x, up) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spearman(x, down) == doctest::Approx(-1.0).epsilon(1e-14));
  // Tied pair gets the average rank; hand-computed Pearson of ranks.
  std::vector<double> xt{1.0, 2.0, 2.0, 3.0};
  std::vector<double> yt{10.0, 20.0, 30.0, 40.0};
  CHECK(spearman(xt, yt) == doctest::Approx(std::sqrt(4.5 / 5.0)).epsilon(1e-12));
}

TEST_CASE("average ranks with ties") {
  std::vector<double> v{10.0, 20.0, 20.0, 30.0};
  const std::vector<double> r = average_ranks(v);
  REQUIRE(r.size() == 4);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 2.5);
  CHECK(r[3] == 4.0);
}

TEST_CASE("normal cdf and log pdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(normal_log_pdf(0.0, 0.0, 1.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-15));
  CHECK(normal_log_pdf(3.0, 1.0, 2.0) ==
        doctest::Approx(-0.5 - std::log(2.0) - 0.9189385332046727).epsilon(1e-14));
}

TEST_CASE("softplus is stable at both tails") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(40.0) == doctest::Approx(40.0).epsilon(1e-15));
  CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-10));
}
