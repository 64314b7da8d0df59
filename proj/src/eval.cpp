#include "entroherd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "entroherd/errors.hpp"
#include "entroherd/kv.hpp"
#include "entroherd/numeric.hpp"

namespace entroherd {

namespace {
constexpr std::size_t kMaxStates = std::size_t{1} << 20;
}

Domain Domain::spin(int n) {
  if (n < 1) throw ConfigError("spin domain: n must be >= 1");
  if (n > 20) throw StateSpaceTooLarge("spin domain limited to 2^20 states");
  Domain d;
  d.spin_n_ = n;
  d.dim_ = n;
  return d;
}

Domain Domain::points(std::vector<Point> pts) {
  if (pts.empty()) throw EmptyDomain();
  if (pts.size() > kMaxStates) throw StateSpaceTooLarge("point domain exceeds 2^20 states");
  Domain d;
  d.dim_ = static_cast<int>(pts[0].size());
  for (const Point& p : pts) {
    if (static_cast<int>(p.size()) != d.dim_) {
      throw std::invalid_argument("point domain: inconsistent dimensions");
    }
  }
  d.points_ = std::move(pts);
  return d;
}

std::size_t Domain::size() const {
  return is_spin() ? (std::size_t{1} << spin_n_) : points_.size();
}

void Domain::state(std::size_t idx, Point& out) const {
  if (is_spin()) {
    out.resize(static_cast<std::size_t>(spin_n_));
    for (int b = 0; b < spin_n_; ++b) out[b] = (idx >> b) & 1 ? 1.0 : -1.0;
    return;
  }
  out = points_.at(idx);
}

Point Domain::state(std::size_t idx) const {
  Point p;
  state(idx, p);
  return p;
}

std::vector<Point> Domain::materialize() const {
  std::vector<Point> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) state(i, out[i]);
  return out;
}

GibbsModel enumerate_gibbs(const FeatureMap& features, const std::vector<double>& theta,
                           const Domain& domain, const MomentSpec* spec) {
  if (theta.size() != features.size()) {
    throw ConfigError("enumerate_gibbs: theta length must match feature count");
  }
  MomentSpec sp = spec != nullptr
                      ? *spec
                      : MomentSpec::direct(std::vector<double>(features.size(), 0.0),
                                           std::vector<double>(features.size(), 1.0));
  const std::size_t n = domain.size();
  std::vector<double> neg_energy(n);
  std::vector<double> phi(features.size());
  Point x;
  for (std::size_t i = 0; i < n; ++i) {
    domain.state(i, x);
    features.eval(x, phi);
    double e = 0.0;
    for (std::size_t m = 0; m < phi.size(); ++m) e += theta[m] * sp.to_working(m, phi[m]);
    neg_energy[i] = -e;
  }
  GibbsModel model{features, theta, std::move(sp), domain, 0.0, {}, {}, 0.0};
  model.log_z = log_sum_exp(neg_energy);
  model.prob.resize(n);
  std::vector<CompensatedSum> mom(features.size());
  CompensatedSum h;
  for (std::size_t i = 0; i < n; ++i) {
    const double lp = neg_energy[i] - model.log_z;
    model.prob[i] = std::exp(lp);
    if (model.prob[i] > 0.0) h.add(-model.prob[i] * lp);
    domain.state(i, x);
    features.eval(x, phi);
    for (std::size_t m = 0; m < phi.size(); ++m) {
      mom[m].add(model.prob[i] * model.spec.to_working(m, phi[m]));
    }
  }
  model.moments.resize(features.size());
  for (std::size_t m = 0; m < features.size(); ++m) model.moments[m] = mom[m].value();
  model.entropy = h.value();
  return model;
}

MomentSpec standardize_from_model(const FeatureMap& features, const GibbsModel& model,
                                  double lambda) {
  return standardize_from_enumeration(features, model.domain.materialize(), model.prob, lambda);
}

KlResult kl_discrete(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_discrete: length mismatch");
  KlResult r;
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      ++r.zero_q_states;
      r.finite = false;
      continue;
    }
    s.add(p[i] * (std::log(p[i]) - std::log(q[i])));
  }
  r.nats = r.finite ? s.value() : std::numeric_limits<double>::infinity();
  return r;
}

std::vector<double> mixture_prob_table(const MixtureModel& model, const Domain& domain) {
  std::vector<double> table(domain.size());
  Point x;
  for (std::size_t i = 0; i < table.size(); ++i) {
    domain.state(i, x);
    const double lp = model.log_density(x);
    table[i] = std::isfinite(lp) ? std::exp(lp) : 0.0;
  }
  return table;
}

namespace {

double working_moment_error(const std::vector<double>& eta, const MomentSpec& spec,
                            bool weighted) {
  double s = 0.0;
  for (std::size_t m = 0; m < eta.size(); ++m) {
    const double d = eta[m] - spec.target[m];
    s += (weighted ? spec.weight[m] : 1.0) * d * d;
  }
  return s;
}

}  // namespace

double loss_from_table(const std::vector<double>& prob, const FeatureMap& features,
                       const MomentSpec& spec, const Domain& domain) {
  if (prob.size() != domain.size()) {
    throw std::invalid_argument("loss_from_table: table/domain size mismatch");
  }
  std::vector<CompensatedSum> mom(features.size());
  CompensatedSum h;
  std::vector<double> phi(features.size());
  Point x;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (prob[i] > 0.0) h.add(-prob[i] * std::log(prob[i]));
    domain.state(i, x);
    features.eval(x, phi);
    for (std::size_t m = 0; m < phi.size(); ++m) {
      mom[m].add(prob[i] * spec.to_working(m, phi[m]));
    }
  }
  std::vector<double> eta(features.size());
  for (std::size_t m = 0; m < eta.size(); ++m) eta[m] = mom[m].value();
  return 0.5 * working_moment_error(eta, spec, true) - h.value();
}

double loss_L(const MixtureModel& model, const FeatureMap& features, const MomentSpec& spec) {
  std::vector<double> eta = mixture_feature_moments(model, features);
  for (std::size_t m = 0; m < eta.size(); ++m) eta[m] = spec.to_working(m, eta[m]);
  return 0.5 * working_moment_error(eta, spec, true) - model.entropy_exact_discrete();
}

double moment_sse(const MixtureModel& model, const FeatureMap& features,
                  const MomentSpec& spec) {
  std::vector<double> eta = mixture_feature_moments(model, features);
  for (std::size_t m = 0; m < eta.size(); ++m) eta[m] = spec.to_working(m, eta[m]);
  return working_moment_error(eta, spec, false);
}

EntropyGap entropy_gap(const MixtureModel& model, const Domain& domain) {
  const std::size_t n_comp = model.n_components();
  EntropyGap out;
  for (std::size_t t = 0; t < n_comp; ++t) {
    out.h_tilde += model.weights()[t] * entropy(model.components()[t]);
    if (model.weights()[t] > 0.0) {
      out.h_rho -= model.weights()[t] * std::log(model.weights()[t]);
    }
  }
  CompensatedSum h_exact, mean_hc;
  Point x;
  std::vector<double> log_comp(n_comp);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    domain.state(i, x);
    for (std::size_t t = 0; t < n_comp; ++t) {
      const double lc = model.family() == Family::PointMass
                            ? log_mass_point(model.components()[t], x)
                            : log_density(model.components()[t], x);
      log_comp[t] = model.weights()[t] > 0.0
                        ? std::log(model.weights()[t]) + lc
                        : -std::numeric_limits<double>::infinity();
    }
    const double lp = log_sum_exp(log_comp);
    if (!std::isfinite(lp)) continue;
    const double p = std::exp(lp);
    h_exact.add(-p * lp);
    double hc = 0.0;
    for (std::size_t t = 0; t < n_comp; ++t) {
      const double lxi = log_comp[t] - lp;
      if (std::isfinite(lxi)) hc -= std::exp(lxi) * lxi;
    }
    mean_hc.add(p * hc);
  }
  out.h_exact = h_exact.value();
  out.mean_hc = mean_hc.value();
  out.gap = out.h_exact - out.h_tilde;
  out.residual = out.gap - (out.h_rho - out.mean_hc);
  return out;
}

FixedPointResult fixed_point_solve(const FeatureMap& features, const MomentSpec& spec,
                                   const Domain& domain, double alpha, double tol,
                                   int max_iter) {
  spec.validate();
  if (spec.size() != features.size()) {
    throw ConfigError("fixed_point_solve: spec/feature size mismatch");
  }
  std::vector<double> theta(features.size(), 0.0);
  std::vector<double> resid_trace;
  for (int it = 1; it <= max_iter; ++it) {
    GibbsModel model = enumerate_gibbs(features, theta, domain, &spec);
    double resid = 0.0;
    for (std::size_t m = 0; m < theta.size(); ++m) {
      const double target_theta = spec.weight[m] * (model.moments[m] - spec.target[m]);
      resid = std::max(resid, std::abs(theta[m] - target_theta));
      theta[m] = (1.0 - alpha) * theta[m] + alpha * target_theta;
    }
    resid_trace.push_back(resid);
    if (resid <= tol) {
      GibbsModel solved = enumerate_gibbs(features, theta, domain, &spec);
      const double loss = loss_from_table(solved.prob, features, spec, domain);
      return FixedPointResult{theta, resid, it, std::move(solved), loss};
    }
  }
  std::string trace = "last residuals:";
  const std::size_t k = resid_trace.size();
  for (std::size_t i = k >= 5 ? k - 5 : 0; i < k; ++i) {
    trace += " " + format_double(resid_trace[i]);
  }
  throw NoConvergence("fixed point iteration hit max_iter; " + trace);
}

std::vector<double> fixed_point_gauss1d(const MomentSpec& spec) {
  if (spec.size() != 2 || spec.standardized) {
    throw ConfigError("fixed_point_gauss1d: needs a direct two-feature (x, x^2) spec");
  }
  if (spec.target[0] != 0.0) {
    throw ConfigError("fixed_point_gauss1d: closed form requires target mean 0");
  }
  const double w2 = spec.weight[1];
  const double t2 = spec.target[1];
  // theta_1 = 0 by symmetry; s^2 = 1/(2 theta_2) and theta_2 = w2*(s^2 - t2)
  // collapse to 2 theta_2^2 + 2 w2 t2 theta_2 - w2 = 0.
  const double theta2 = 0.5 * (-w2 * t2 + std::sqrt(w2 * w2 * t2 * t2 + 2.0 * w2));
  return {0.0, theta2};
}

HistogramCompare histogram_compare(const MixtureModel& model,
                                   const std::function<double(double)>& target_log_unnorm,
                                   double lo, double hi, double bin_width) {
  if (!(hi > lo) || !(bin_width > 0.0)) {
    throw std::invalid_argument("histogram_compare: bad range or bin width");
  }
  const int n_bins = static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12));
  HistogramCompare out;
  out.edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b) {
    out.edges[static_cast<std::size_t>(b)] = b == n_bins ? hi : lo + bin_width * b;
  }
  out.mass_model.assign(static_cast<std::size_t>(n_bins), 0.0);
  out.mass_target.assign(static_cast<std::size_t>(n_bins), 0.0);

  if (model.family() == Family::PointMass) {
    for (std::size_t t = 0; t < model.n_components(); ++t) {
      const double x = model.components()[t].x.at(0);
      if (x < lo || x >= hi) {
        out.outside_model += model.weights()[t];
        continue;
      }
      const int b = std::min(n_bins - 1, static_cast<int>((x - lo) / bin_width));
      out.mass_model[static_cast<std::size_t>(b)] += model.weights()[t];
    }
  } else {
    for (int b = 0; b < n_bins; ++b) {
      out.mass_model[static_cast<std::size_t>(b)] =
          model.cdf(out.edges[static_cast<std::size_t>(b) + 1]) -
          model.cdf(out.edges[static_cast<std::size_t>(b)]);
    }
    out.outside_model = model.cdf(lo) + (1.0 - model.cdf(hi));
  }

  auto pdf = [&](double x) { return std::exp(target_log_unnorm(x)); };
  const double z = integrate(pdf, lo, hi, 1e-12);
  if (!(z > 0.0)) throw NumericalError("histogram_compare: target normalizer vanished");
  for (int b = 0; b < n_bins; ++b) {
    out.mass_target[static_cast<std::size_t>(b)] =
        integrate(pdf, out.edges[static_cast<std::size_t>(b)],
                  out.edges[static_cast<std::size_t>(b) + 1], 1e-12) /
        z;
  }
  out.outside_target = 0.0;  // target normalized over the range

  double tv = std::abs(out.outside_model - out.outside_target);
  for (int b = 0; b < n_bins; ++b) {
    tv += std::abs(out.mass_model[static_cast<std::size_t>(b)] -
                   out.mass_target[static_cast<std::size_t>(b)]);
  }
  out.tv = 0.5 * tv;
  return out;
}

std::string gibbs_scatter_csv(const GibbsModel& target, const std::vector<double>& p_model,
                              const std::vector<double>& p_empirical) {
  if (p_model.size() != target.prob.size() || p_empirical.size() != target.prob.size()) {
    throw std::invalid_argument("gibbs_scatter_csv: table size mismatch");
  }
  std::ostringstream csv;
  csv << "state,p_target,p_model,p_empirical\n";
  Point x;
  for (std::size_t i = 0; i < target.prob.size(); ++i) {
    target.domain.state(i, x);
    std::string bits;
    for (double v : x) bits += v > 0.0 ? '+' : '-';
    csv << bits << "," << format_double(target.prob[i]) << "," << format_double(p_model[i])
        << "," << format_double(p_empirical[i]) << "\n";
  }
  return csv.str();
}

}  // namespace entroherd
