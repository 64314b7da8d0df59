#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "entroherd/config.hpp"
#include "entroherd/engine.hpp"
#include "entroherd/errors.hpp"
#include "entroherd/families.hpp"
#include "entroherd/features.hpp"
#include "entroherd/moment_spec.hpp"
#include "entroherd/rng.hpp"
#include "test_support.hpp"

using namespace entroherd;

namespace {

std::vector<Point> random_domain(int n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts.push_back({u(g)});
  return pts;
}

}  // namespace

TEST_CASE("adam takes a bias-corrected first step of size lr") {
  OptimizerState opt;
  opt.reset(1);
  std::vector<double> params{0.0};
  opt.step(params, {1.0}, 0.2);
  CHECK(params[0] == doctest::Approx(-0.2 / (1.0 + 1e-8)).epsilon(1e-12));
  // A constant gradient keeps the corrected step at lr.
  opt.step(params, {1.0}, 0.2);
  CHECK(params[0] == doctest::Approx(-0.4).epsilon(1e-7));
  opt.reset(1);
  CHECK(opt.t == 0);
  CHECK(opt.m[0] == 0.0);
  CHECK(opt.v[0] == 0.0);
}

TEST_CASE("working moments standardize raw analytic moments") {
  const FeatureMap f = FeatureMap::poly1d(2);
  std::vector<Point> data{{-1.0}, {0.0}, {1.0}, {2.0}};
  const MomentSpec spec = standardize_from_data(f, data, 3.0);
  REQUIRE(spec.size() == 2);
  // raw means: E[x] = 0.5, E[x^2] = 1.5
  CHECK(spec.raw_mean[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(spec.raw_mean[1] == doctest::Approx(1.5).epsilon(1e-14));
  for (double t : spec.target) CHECK(t == 0.0);
  for (double w : spec.weight) CHECK(w == 3.0);

  const ComponentParams q = ComponentParams::gauss1d(1.0, 2.0);
  const std::vector<double> raw = feature_moments(q, f);
  const std::vector<double> working = working_moments(q, f, spec);
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(working[m] ==
          doctest::Approx((raw[m] - spec.raw_mean[m]) / spec.raw_std[m]).epsilon(1e-14));
  }
  // effective weight = lambda / raw_std
  const std::vector<double> ew = spec.effective_weight();
  for (std::size_t m = 0; m < 2; ++m) {
    CHECK(ew[m] == doctest::Approx(3.0 / spec.raw_std[m]).epsilon(1e-14));
  }
}

TEST_CASE("inner objective is sum(a*eta) minus entropy") {
  const FeatureMap f = FeatureMap::poly1d(2);
  const MomentSpec spec = MomentSpec::direct({0.0, 1.0}, {1.0, 1.0});
  const ComponentParams q = ComponentParams::gauss1d(0.5, 1.5);
  const std::vector<double> a{0.7, -0.3};
  const std::vector<double> eta = working_moments(q, f, spec);
  const double expect = a[0] * eta[0] + a[1] * eta[1] - entropy(q);
  CHECK(inner_objective(q, a, f, spec) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("inner gradient matches finite differences") {
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> ua(-1.0, 1.0);

  SUBCASE("gaussian over polynomial features, standardized spec") {
    const FeatureMap f = FeatureMap::poly1d(4);
    std::vector<Point> data;
    std::normal_distribution<double> nd(0.3, 1.1);
    for (int i = 0; i < 200; ++i) data.push_back({nd(g)});
    const MomentSpec spec = standardize_from_data(f, data, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
      const ComponentParams q = ComponentParams::gauss1d(ua(g), 0.5 + 0.5 * (1 + ua(g)));
      std::vector<double> a(4);
      for (double& v : a) v = ua(g);
      const std::vector<double> grad = inner_gradient(q, a, f, spec);
      const std::vector<double> c0 = get_opt_coords(q);
      for (std::size_t k = 0; k < c0.size(); ++k) {
        const double numeric = oracle::fd(
            [&](double v) {
              ComponentParams qq = q;
              std::vector<double> c = c0;
              c[k] = v;
              set_opt_coords(qq, c);
              return inner_objective(qq, a, f, spec);
            },
            c0[k]);
        CHECK(oracle::rel_err(grad[k], numeric) < 1e-4);
      }
    }
  }

  SUBCASE("spin gradient follows the dropped-coefficient convention") {
    const FeatureMap f = FeatureMap::spin_pairwise(3);
    const MomentSpec spec = MomentSpec::direct({0.1, -0.2, 0.3}, {1.0, 1.0, 1.0});
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> p{0.5 + 0.3 * ua(g), 0.5 + 0.3 * ua(g), 0.5 + 0.3 * ua(g)};
      const ComponentParams q = ComponentParams::spin_bernoulli(p);
      std::vector<double> a(3);
      for (double& v : a) v = ua(g);
      const std::vector<double> grad = inner_gradient(q, a, f, spec);
      for (std::size_t k = 0; k < 3; ++k) {
        const double numeric = oracle::fd(
            [&](double v) {
              std::vector<double> pp = p;
              pp[k] = v;
              return inner_objective(ComponentParams::spin_bernoulli(pp), a, f, spec);
            },
            p[k]);
        CHECK(oracle::rel_err(grad[k], numeric) < 1e-4);
      }
    }
  }
}

TEST_CASE("modified weights anticipate the update from the current iterate") {
  const FeatureMap f = FeatureMap::poly1d(2);
  const MomentSpec spec = MomentSpec::direct({0.2, 1.1}, {2.0, 3.0});
  const ComponentParams q = ComponentParams::gauss1d(0.4, 0.9);
  const std::vector<double> a{0.5, -0.8};
  const double eps = 0.07;
  const std::vector<double> am = modified_weights(a, q, f, spec, eps);
  const std::vector<double> eta = working_moments(q, f, spec);
  for (std::size_t m = 0; m < 2; ++m) {
    const double expect = a[m] + eps * (spec.weight[m] * (eta[m] - spec.target[m]) - a[m]);
    CHECK(am[m] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("weight update maintains a = weight*(tracked moment - target)") {
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MomentSpec spec = MomentSpec::direct({0.1, -0.4, 0.9}, {1.5, 2.5, 0.5});
  WeightState st;
  st.running_moment = {u(g), u(g), u(g)};
  st.running_entropy = 0.3;
  st.a.resize(3);
  for (std::size_t m = 0; m < 3; ++m) {
    st.a[m] = spec.weight[m] * (st.running_moment[m] - spec.target[m]);
  }
  for (int t = 0; t < 50; ++t) {
    std::vector<double> eta{u(g), u(g), u(g)};
    herding_weight_update(st, eta, 0.5 + 0.2 * u(g), spec, 0.05 + 0.01 * (t % 3));
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(st.a[m] == doctest::Approx(spec.weight[m] *
                                       (st.running_moment[m] - spec.target[m]))
                           .epsilon(1e-12));
    }
  }
  // Tracked loss formula.
  double sse = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    const double d = st.running_moment[m] - spec.target[m];
    sse += spec.weight[m] * d * d;
  }
  CHECK(tracked_loss(st, spec) ==
        doctest::Approx(0.5 * sse - st.running_entropy).epsilon(1e-13));
}

TEST_CASE("epsilon schedules: constant repeats, harmonic averages uniformly") {
  HerdingConfig c;
  c.eps_herding = 0.03;
  CHECK(c.eps_at(1) == 0.03);
  CHECK(c.eps_at(500) == 0.03);
  c.epsilon_schedule = EpsSchedule::Harmonic;
  CHECK(c.eps_at(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.eps_at(9) == doctest::Approx(0.1).epsilon(1e-15));

  // Harmonic tracking equals the uniform mean of everything seen so far.
  const MomentSpec spec = MomentSpec::direct({0.0}, {1.0});
  WeightState st;
  st.running_moment = {2.0};  // eta of the initial component
  st.a = {2.0};
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double sum = 2.0;
  for (int t = 1; t <= 40; ++t) {
    const double eta = u(g);
    sum += eta;
    herding_weight_update(st, std::vector<double>{eta}, 0.0, spec,
                          1.0 / static_cast<double>(t + 1));
    CHECK(st.running_moment[0] ==
          doctest::Approx(sum / static_cast<double>(t + 1)).epsilon(1e-12));
  }
}

TEST_CASE("metropolis rule always accepts improvements") {
  RngStream r(1, "metropolis");
  CHECK(metropolis_accept(0.0, r));
  CHECK(metropolis_accept(-5.0, r));
  int accepted = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    if (metropolis_accept(1.0, r)) ++accepted;
  }
  const double rate = static_cast<double>(accepted) / n;
  const double expect = std::exp(-1.0);
  CHECK(std::abs(rate - expect) < 5.0 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("spin jumps flip signs only on strict improvement") {
  const FeatureMap f = FeatureMap::spin_pairwise(2);
  const MomentSpec spec = MomentSpec::direct({0.0}, {1.0});
  // F depends on the signs only through a*eta; entropy is sign-invariant.
  ComponentParams q = ComponentParams::spin_logits({2.0, 2.0});
  const std::vector<double> a{3.0};
  const double f_start = inner_objective(q, a, f, spec);
  RngStream r(4, "jump");
  std::vector<double> lo, hi;
  double f_cur = f_start;
  bool changed = false;
  for (int i = 0; i < 200; ++i) {
    const ComponentParams before = q;
    const bool moved = jump_move(q, a, f, spec, r, lo, hi);
    const double f_new = inner_objective(q, a, f, spec);
    if (moved) {
      CHECK(f_new < f_cur);
      changed = true;
    } else {
      CHECK(q == before);
    }
    CHECK(std::abs(q.s[0]) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(q.s[1]) == doctest::Approx(2.0).epsilon(1e-15));
    f_cur = f_new;
  }
  // The opposite-sign patterns minimize a*eta; random proposals find one.
  CHECK(changed);
  CHECK(q.s[0] * q.s[1] < 0.0);
}

TEST_CASE("gaussian jumps redraw means inside the seen range and keep sigma") {
  const FeatureMap f = FeatureMap::poly1d(2);
  const MomentSpec spec = MomentSpec::direct({0.5, 1.0}, {4.0, 4.0});
  ComponentParams q = ComponentParams::gauss1d(-1.0, 0.7);
  const std::vector<double> a{-2.0, 0.3};
  RngStream r(8, "jump");
  const std::vector<double> lo{-1.5}, hi{2.5};
  for (int i = 0; i < 200; ++i) {
    const ComponentParams before = q;
    const double f_before = inner_objective(q, a, f, spec);
    const bool moved = jump_move(q, a, f, spec, r, lo, hi);
    if (moved) {
      CHECK(inner_objective(q, a, f, spec) < f_before);
      CHECK(q.mu[0] >= lo[0]);
      CHECK(q.mu[0] <= hi[0]);
    } else {
      CHECK(q == before);
    }
    CHECK(q.l[0] == before.l[0]);
  }
}

TEST_CASE("entropic runs are reproducible and start from the declared weights") {
  const FeatureMap f = FeatureMap::poly1d(3);
  std::mt19937_64 g(123);
  std::vector<Point> data;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < 500; ++i) data.push_back({nd(g)});
  const MomentSpec spec = standardize_from_data(f, data, 10.0);

  HerdingConfig c;
  c.eps_herding = 0.05;
  c.t_output = 30;
  c.t_burnin = 5;
  c.k_update = 10;
  c.p_jump = 0.1;
  c.seed = 42;

  const ComponentParams init = ComponentParams::gauss1d(0.0, 1.0);
  const HerdingRun r1 = run_entropic(f, spec, c, init);
  const HerdingRun r2 = run_entropic(f, spec, c, init);
  REQUIRE(r1.trajectory.size() == 35);
  REQUIRE(r2.trajectory.size() == 35);
  REQUIRE(r1.initial.has_value());
  for (std::size_t t = 0; t < r1.trajectory.size(); ++t) {
    CHECK(r1.trajectory[t].r == r2.trajectory[t].r);
    CHECK(r1.trajectory[t].a == r2.trajectory[t].a);
  }
  // a^(0) = weight * (eta(r0) - target)
  const std::vector<double> eta0 = working_moments(init, f, spec);
  for (std::size_t m = 0; m < spec.size(); ++m) {
    CHECK(r1.initial->a[m] ==
          doctest::Approx(spec.weight[m] * (eta0[m] - spec.target[m])).epsilon(1e-13));
  }
  // A different seed moves the jump draws.
  HerdingConfig c2 = c;
  c2.seed = 43;
  const HerdingRun r3 = run_entropic(f, spec, c2, init);
  bool any_diff = false;
  for (std::size_t t = 0; t < r1.trajectory.size(); ++t) {
    any_diff = any_diff || !(r1.trajectory[t].r == r3.trajectory[t].r);
  }
  CHECK(any_diff);
}

TEST_CASE("sigma floor survives aggressive inner optimization") {
  const FeatureMap f = FeatureMap::poly1d(2);
  // Heavy weight on the second moment with a tiny target squeezes sigma.
  const MomentSpec spec = MomentSpec::direct({0.0, 0.0001}, {1.0, 5000.0});
  HerdingConfig c;
  c.t_output = 20;
  c.k_update = 50;
  const HerdingRun run = run_entropic(f, spec, c, ComponentParams::gauss1d(0.0, 1.0));
  for (const TrajectoryStep& s : run.trajectory) {
    CHECK(s.r.sigma(0) >= kSigmaFloor - 1e-15);
  }
}

TEST_CASE("classic point herding follows the hand-computed cycle") {
  const FeatureMap f = FeatureMap::poly1d(1);
  const MomentSpec spec = MomentSpec::direct({0.5}, {1.0});
  const std::vector<Point> domain{{-1.0}, {1.0}};
  HerdingConfig c;
  c.t_output = 8;
  const HerdingRun run = run_point(f, spec, c, domain);
  REQUIRE(run.trajectory.size() == 8);
  CHECK_FALSE(run.initial.has_value());
  // Ties scan to the first domain entry, so the cycle is -1, +1, +1, +1, ...
  const double expect_x[] = {-1, 1, 1, 1, -1, 1, 1, 1};
  const double expect_w[] = {1.5, 1.0, 0.5, 0.0, 1.5, 1.0, 0.5, 0.0};
  for (int t = 0; t < 8; ++t) {
    CHECK(run.trajectory[t].r.x[0] == expect_x[t]);
    CHECK(run.trajectory[t].a[0] == doctest::Approx(expect_w[t]).epsilon(1e-14));
  }
  // Uniform running moment: mean of the emitted points.
  double mean = 0.0;
  for (int t = 0; t < 8; ++t) mean += expect_x[t];
  mean /= 8.0;
  CHECK(run.trajectory.back().eta[0] == 1.0);  // eta stores phi of the step's point
  const MixtureModel out = run.output_mixture();
  const std::vector<double> eta_out = mixture_feature_moments(out, f);
  CHECK(eta_out[0] == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("point herding error decays like 1/T") {
  const FeatureMap f = FeatureMap::poly1d(2);
  std::mt19937_64 g(3);
  const std::vector<Point> domain = random_domain(64, g);
  // Feasible target: mean features of a random subset.
  std::vector<double> target(2, 0.0);
  for (int i = 0; i < 8; ++i) {
    const std::vector<double> phi = f.eval(domain[static_cast<std::size_t>(i * 7)]);
    for (std::size_t m = 0; m < 2; ++m) target[m] += phi[m] / 8.0;
  }
  const MomentSpec spec = MomentSpec::direct(target, {1.0, 1.0});
  HerdingConfig c;
  c.t_output = 2000;
  const HerdingRun run = run_point(f, spec, c, domain);
  double max_err = 0.0;
  const TrajectoryStep& last = run.trajectory.back();
  const MixtureModel out = run.mixture_at(2000);
  const std::vector<double> eta = mixture_feature_moments(out, f);
  for (std::size_t m = 0; m < 2; ++m) {
    max_err = std::max(max_err, std::abs(eta[m] - target[m]));
  }
  CHECK(max_err * 2000.0 < 10.0);
  CHECK(last.t == 2000);
}

TEST_CASE("metropolis point herding is reproducible and stays in the domain") {
  const FeatureMap f = FeatureMap::poly1d(2);
  std::mt19937_64 g(17);
  const std::vector<Point> domain = random_domain(32, g);
  const MomentSpec spec = standardize_from_data(f, domain, 50.0);
  HerdingConfig c;
  c.t_output = 200;
  c.k_update = 20;
  c.seed = 9;
  const HerdingRun r1 = run_point_metropolis(f, spec, c, domain);
  const HerdingRun r2 = run_point_metropolis(f, spec, c, domain);
  REQUIRE(r1.trajectory.size() == 200);
  for (std::size_t t = 0; t < 200; ++t) {
    CHECK(r1.trajectory[t].r == r2.trajectory[t].r);
    const Point& x = r1.trajectory[t].r.x;
    CHECK(std::find(domain.begin(), domain.end(), x) != domain.end());
  }
  // The sampler drifts toward the target: tracked loss improves vs step 1.
  CHECK(r1.trajectory.back().ltilde < r1.trajectory.front().ltilde);
}

TEST_CASE("point-family runs with harmonic weights reproduce classic herding") {
  std::mt19937_64 g(555);
  for (int inst = 0; inst < 3; ++inst) {
    const FeatureMap f = FeatureMap::poly1d(2);
    const std::vector<Point> domain = random_domain(40, g);
    std::vector<double> target(2, 0.0);
    for (int i = 0; i < 5; ++i) {
      const std::vector<double> phi = f.eval(domain[static_cast<std::size_t>(i * 3 + 1)]);
      for (std::size_t m = 0; m < 2; ++m) target[m] += phi[m] / 5.0;
    }
    const double lambda = 4.0;
    const MomentSpec spec = MomentSpec::direct(target, {lambda, lambda});

    HerdingConfig c;
    c.t_output = 300;
    c.epsilon_schedule = EpsSchedule::Harmonic;

    const ComponentParams init = ComponentParams::point_mass(domain[0]);
    const HerdingRun ent = run_entropic(f, spec, c, init, &domain);
    const std::vector<std::vector<double>> wprime = point_equivalence_transform(ent);
    REQUIRE(wprime.size() == 301);

    const HerdingRun classic = run_point(f, spec, c, domain, &wprime[0]);
    for (int t = 1; t <= 300; ++t) {
      const std::size_t ti = static_cast<std::size_t>(t);
      CHECK(ent.trajectory[ti - 1].r.x == classic.trajectory[ti - 1].r.x);
      for (std::size_t m = 0; m < 2; ++m) {
        CHECK(std::abs(wprime[ti][m] - classic.trajectory[ti - 1].a[m]) < 1e-12);
      }
    }
  }
}

TEST_CASE("the equivalence transform rejects non-harmonic or unequal weights") {
  const FeatureMap f = FeatureMap::poly1d(1);
  const std::vector<Point> domain{{-1.0}, {0.0}, {1.0}};
  HerdingConfig c;
  c.t_output = 5;
  const MomentSpec spec = MomentSpec::direct({0.2}, {2.0});
  const HerdingRun constant_run =
      run_entropic(f, spec, c, ComponentParams::point_mass(domain[0]), &domain);
  CHECK_THROWS_AS(point_equivalence_transform(constant_run), ScheduleMismatch);

  HerdingConfig ch = c;
  ch.epsilon_schedule = EpsSchedule::Harmonic;
  const FeatureMap f2 = FeatureMap::poly1d(2);
  const MomentSpec uneven = MomentSpec::direct({0.2, 0.5}, {2.0, 3.0});
  const HerdingRun uneven_run =
      run_entropic(f2, uneven, ch, ComponentParams::point_mass(domain[0]), &domain);
  CHECK_THROWS_AS(point_equivalence_transform(uneven_run), ScheduleMismatch);
}

TEST_CASE("trajectory exports are well formed") {
  const FeatureMap f = FeatureMap::poly1d(2);
  const MomentSpec spec = MomentSpec::direct({0.0, 1.0}, {2.0, 2.0});
  HerdingConfig c;
  c.t_output = 6;
  c.t_burnin = 2;
  const HerdingRun run = run_entropic(f, spec, c, ComponentParams::gauss1d(0.0, 1.0));
  const std::string csv = run.trajectory_csv();
  // Header plus one row per step including t = 0.
  const std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == 1 + 1 + 8);
  CHECK(csv.find("ltilde") != std::string::npos);
  const std::string js = run.to_json_string();
  CHECK(js.find("\"steps\"") != std::string::npos);
  CHECK(js.find("\"output\"") != std::string::npos);

  const MixtureModel out = run.output_mixture();
  CHECK(out.n_components() == 6);
  const MixtureModel tracked = run.mixture_at(3);
  CHECK(tracked.n_components() == 4);  // r^(0..3)
  const std::vector<double> rho = run.rho_weights(3);
  double total = 0.0;
  for (double w : rho) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // Constant eps: newest component carries weight eps.
  CHECK(rho.back() == doctest::Approx(c.eps_herding).epsilon(1e-12));
}

TEST_CASE("run configuration validation rejects nonsense") {
  HerdingConfig c;
  c.eps_herding = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HerdingConfig{};
  c.t_output = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HerdingConfig{};
  c.p_jump = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HerdingConfig{};
  c.eta_learn = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
