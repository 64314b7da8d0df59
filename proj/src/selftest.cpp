#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "entroherd/data.hpp"
#include "entroherd/engine.hpp"
#include "entroherd/eval.hpp"
#include "entroherd/experiments.hpp"
#include "entroherd/families.hpp"
#include "entroherd/rng.hpp"

namespace entroherd {

namespace {

constexpr double kGradTol = 1e-4;

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
}

// Central finite differences on the raw feature moments against the
// analytic Jacobian. Spins are differentiated with respect to p, the same
// coordinate the analytic Jacobian uses. `corruption` perturbs one Jacobian
// entry to prove the comparison has teeth.
double moment_grad_max_rel_err(const ComponentParams& q, const FeatureMap& features,
                               double corruption = 0.0) {
  std::vector<double> jac = moment_jacobian(q, features);
  if (corruption != 0.0 && !jac.empty()) jac[0] += corruption;
  const std::size_t n_params = q.n_opt();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < n_params; ++k) {
    std::vector<double> mp, mm;
    if (q.family == Family::SpinBernoulli) {
      std::vector<double> p(q.s.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = q.p_up(i);
      std::vector<double> pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      mp = feature_moments(ComponentParams::spin_bernoulli(pp), features);
      mm = feature_moments(ComponentParams::spin_bernoulli(pm), features);
    } else {
      std::vector<double> coords = get_opt_coords(q);
      ComponentParams qp = q, qm = q;
      coords[k] += h;
      set_opt_coords(qp, coords);
      coords[k] -= 2.0 * h;
      set_opt_coords(qm, coords);
      mp = feature_moments(qp, features);
      mm = feature_moments(qm, features);
    }
    for (std::size_t m = 0; m < features.size(); ++m) {
      const double fd = (mp[m] - mm[m]) / (2.0 * h);
      worst = std::max(worst, rel_err(jac[m * n_params + k], fd));
    }
  }
  return worst;
}

double entropy_grad_max_rel_err(const ComponentParams& q) {
  const std::vector<double> grad = entropy_gradient(q);
  const std::size_t n_params = q.n_opt();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < n_params; ++k) {
    double hp, hm;
    if (q.family == Family::SpinBernoulli) {
      std::vector<double> p(q.s.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = q.p_up(i);
      std::vector<double> pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      hp = entropy(ComponentParams::spin_bernoulli(pp));
      hm = entropy(ComponentParams::spin_bernoulli(pm));
    } else {
      std::vector<double> coords = get_opt_coords(q);
      ComponentParams qp = q, qm = q;
      coords[k] += h;
      set_opt_coords(qp, coords);
      coords[k] -= 2.0 * h;
      set_opt_coords(qm, coords);
      hp = entropy(qp);
      hm = entropy(qm);
    }
    worst = std::max(worst, rel_err(grad[k], (hp - hm) / (2.0 * h)));
  }
  return worst;
}

MixtureModel random_spin_mixture(int n, int n_comp, RngStream& rng) {
  std::vector<ComponentParams> comps;
  std::vector<double> weights;
  double total = 0.0;
  for (int k = 0; k < n_comp; ++k) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (double& v : s) v = rng.uniform(-2.0, 2.0);
    comps.push_back(ComponentParams::spin_logits(s));
    const double w = 0.1 + rng.uniform();
    weights.push_back(w);
    total += w;
  }
  for (double& w : weights) w /= total;
  return MixtureModel(std::move(comps), std::move(weights));
}

struct Checker {
  std::ostream& out;
  int failures = 0;

  void result(const std::string& name, bool pass, const std::string& detail) {
    out << (pass ? "PASS  " : "FAIL  ") << name;
    if (!detail.empty()) out << "  (" << detail << ")";
    out << "\n";
    if (!pass) ++failures;
  }
};

std::string err_detail(double worst) { return "max rel err " + format_double(worst); }

}  // namespace

int cmd_selftest(std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  Checker check{out};
  RngStream rng(0, "selftest");

  {
    const FeatureMap features = FeatureMap::poly1d(4);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const ComponentParams q =
          ComponentParams::gauss1d(rng.uniform(-2.0, 2.0), std::exp(rng.uniform(-1.5, 1.0)));
      worst = std::max(worst, moment_grad_max_rel_err(q, features));
      worst = std::max(worst, entropy_grad_max_rel_err(q));
    }
    check.result("power-moment and entropy gradients, 1-d gaussian", worst < kGradTol,
                 err_detail(worst));
  }

  {
    const FeatureMap features = FeatureMap::centered_moments(3);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> mu(3), sigma(3);
      for (double& v : mu) v = rng.uniform(-1.5, 1.5);
      for (double& v : sigma) v = std::exp(rng.uniform(-1.0, 0.5));
      const ComponentParams q = ComponentParams::gauss_diag(mu, sigma);
      worst = std::max(worst, moment_grad_max_rel_err(q, features));
      worst = std::max(worst, entropy_grad_max_rel_err(q));
    }
    check.result("moment and entropy gradients, diagonal gaussian", worst < kGradTol,
                 err_detail(worst));
  }

  {
    const FeatureMap features = FeatureMap::spin_pairwise(4);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> p(4);
      for (double& v : p) v = rng.uniform(0.15, 0.85);
      const ComponentParams q = ComponentParams::spin_bernoulli(p);
      worst = std::max(worst, moment_grad_max_rel_err(q, features));
      worst = std::max(worst, entropy_grad_max_rel_err(q));
    }
    check.result("pairwise-moment and entropy gradients, spin", worst < kGradTol,
                 err_detail(worst));
  }

  {
    const FeatureMap features = FeatureMap::poly1d(4);
    const ComponentParams q = ComponentParams::gauss1d(0.7, 0.8);
    const double worst = moment_grad_max_rel_err(q, features, 0.5);
    check.result("gradient check detects a corrupted moment formula", worst > kGradTol,
                 err_detail(worst));
  }

  {
    const Domain domain = Domain::spin(4);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const MixtureModel model = random_spin_mixture(4, 5, rng);
      const EntropyGap gap = entropy_gap(model, domain);
      worst = std::max(worst, std::abs(gap.residual));
    }
    check.result("mixture entropy gap identity", worst < 1e-10,
                 "max residual " + format_double(worst));
  }

  {
    const FeatureMap features = FeatureMap::spin_pairwise(4);
    const Domain domain = Domain::spin(4);
    const MixtureModel ref = random_spin_mixture(4, 5, rng);
    const std::vector<double> target = mixture_feature_moments(ref, features);
    const MomentSpec spec =
        MomentSpec::direct(target, std::vector<double>(features.size(), 3.0));
    const FixedPointResult fp = fixed_point_solve(features, spec, domain);
    bool optimal = fp.residual < 1e-8;
    double worst_violation = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const MixtureModel q = random_spin_mixture(4, 4, rng);
      worst_violation = std::max(worst_violation, fp.loss - loss_L(q, features, spec));
    }
    optimal = optimal && worst_violation <= 1e-9;
    check.result("fixed point solves the single-component problem", optimal,
                 "residual " + format_double(fp.residual) + ", worst margin " +
                     format_double(worst_violation));
  }

  {
    const FeatureMap features = FeatureMap::poly1d(2);
    std::vector<Point> grid;
    for (int i = 0; i <= 80; ++i) grid.push_back({-2.0 + 0.05 * i});
    std::vector<double> target(features.size(), 0.0);
    double total = 0.0;
    for (int k = 0; k < 5; ++k) {
      const std::size_t pick = rng.uniform_int(grid.size());
      const double w = 0.2 + rng.uniform();
      const std::vector<double> phi = features.eval(grid[pick]);
      for (std::size_t m = 0; m < target.size(); ++m) target[m] += w * phi[m];
      total += w;
    }
    for (double& t : target) t /= total;
    const MomentSpec spec =
        MomentSpec::direct(target, std::vector<double>(features.size(), 4.0));
    HerdingConfig cfg;
    cfg.epsilon_schedule = EpsSchedule::Harmonic;
    cfg.t_output = 200;
    cfg.t_burnin = 0;
    cfg.lambda = 4.0;
    const HerdingRun run_e = run_entropic(features, spec, cfg,
                                          ComponentParams::point_mass(grid[0]), &grid);
    const std::vector<std::vector<double>> wprime = point_equivalence_transform(run_e);
    const HerdingRun run_p = run_point(features, spec, cfg, grid, &wprime[0]);
    double worst = 0.0;
    for (int t = 1; t <= cfg.t_total(); ++t) {
      const std::vector<double>& a = run_p.trajectory[static_cast<std::size_t>(t - 1)].a;
      for (std::size_t m = 0; m < a.size(); ++m) {
        worst = std::max(worst, std::abs(a[m] - wprime[static_cast<std::size_t>(t)][m]));
      }
    }
    check.result("entropic run with point components reproduces classic weights",
                 worst < 1e-12, "max weight gap " + format_double(worst));
  }

  {
    const GibbsModel target = make_boltzmann_instance(4, 7);
    const MomentSpec spec = standardize_from_model(target.features, target, 3.0);
    HerdingConfig cfg;
    cfg.eps_herding = 0.05;
    cfg.t_output = 40;
    cfg.t_burnin = 0;
    cfg.k_update = 30;
    cfg.p_jump = 0.1;
    cfg.lambda = 3.0;
    std::vector<double> s0(4);
    for (double& v : s0) v = rng.uniform(-0.5, 0.5);
    const HerdingRun run = run_entropic(target.features, spec, cfg,
                                        ComponentParams::spin_logits(s0));
    double worst = -1e300;
    for (int t = 1; t <= cfg.t_total(); ++t) {
      const MixtureModel model = run.mixture_at(t);
      const double exact = loss_L(model, target.features, spec);
      const double ltilde = run.trajectory[static_cast<std::size_t>(t - 1)].ltilde;
      worst = std::max(worst, exact - ltilde);
    }
    check.result("tracked loss stays an upper bound along the run", worst <= 1e-9,
                 "worst exact-minus-tracked " + format_double(worst));
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out << (check.failures == 0 ? "OK" : "FAILED") << "  " << check.failures
      << " failing check(s), " << format_double(elapsed) << "s\n";
  return check.failures;
}

}  // namespace entroherd
