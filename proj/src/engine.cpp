#include "entroherd/engine.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "entroherd/errors.hpp"
#include "entroherd/numeric.hpp"

namespace entroherd {

void OptimizerState::reset(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  t = 0;
}

void OptimizerState::step(std::vector<double>& params, const std::vector<double>& grad,
                          double lr) {
  if (params.size() != m.size() || grad.size() != m.size()) {
    throw std::invalid_argument("optimizer step: size mismatch");
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
    const double mhat = m[k] / c1;
    const double vhat = v[k] / c2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::vector<double> get_opt_coords(const ComponentParams& q) {
  switch (q.family) {
    case Family::Gauss1D:
    case Family::GaussDiag: {
      std::vector<double> c = q.mu;
      c.insert(c.end(), q.l.begin(), q.l.end());
      return c;
    }
    case Family::SpinBernoulli: return q.s;
    case Family::PointMass: return {};
  }
  return {};
}

void set_opt_coords(ComponentParams& q, const std::vector<double>& coords) {
  switch (q.family) {
    case Family::Gauss1D:
    case Family::GaussDiag: {
      const std::size_t n = q.mu.size();
      if (coords.size() != 2 * n) throw std::invalid_argument("set_opt_coords: size mismatch");
      std::copy(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n), q.mu.begin());
      std::copy(coords.begin() + static_cast<std::ptrdiff_t>(n), coords.end(), q.l.begin());
      q.clamp_sigma_floor();
      return;
    }
    case Family::SpinBernoulli:
      if (coords.size() != q.s.size()) throw std::invalid_argument("set_opt_coords: size mismatch");
      q.s = coords;
      return;
    case Family::PointMass:
      if (!coords.empty()) throw std::invalid_argument("point mass has no optimizer coords");
      return;
  }
}

void working_moments(const ComponentParams& q, const FeatureMap& features,
                     const MomentSpec& spec, std::vector<double>& out) {
  out.resize(features.size());
  feature_moments(q, features, out);
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = spec.to_working(m, out[m]);
}

std::vector<double> working_moments(const ComponentParams& q, const FeatureMap& features,
                                    const MomentSpec& spec) {
  std::vector<double> out;
  working_moments(q, features, spec, out);
  return out;
}

double inner_objective(const ComponentParams& q, const std::vector<double>& a,
                       const FeatureMap& features, const MomentSpec& spec) {
  std::vector<double> eta;
  working_moments(q, features, spec, eta);
  double f = 0.0;
  for (std::size_t m = 0; m < eta.size(); ++m) f += a[m] * eta[m];
  return f - entropy(q);
}

std::vector<double> inner_gradient(const ComponentParams& q, const std::vector<double>& a,
                                   const FeatureMap& features, const MomentSpec& spec) {
  const std::size_t M = features.size();
  const std::size_t P = q.n_opt();
  const std::vector<double> jac = moment_jacobian(q, features);
  std::vector<double> g = entropy_gradient(q);
  for (double& gk : g) gk = -gk;
  for (std::size_t m = 0; m < M; ++m) {
    const double w = a[m] / spec.raw_std[m];  // d eta_working / d eta_raw
    if (w == 0.0) continue;
    const double* row = &jac[m * P];
    for (std::size_t k = 0; k < P; ++k) g[k] += w * row[k];
  }
  return g;
}

void inner_gradient_step(ComponentParams& q, OptimizerState& opt, const std::vector<double>& a,
                         const FeatureMap& features, const MomentSpec& spec, double eta_learn) {
  const std::vector<double> grad = inner_gradient(q, a, features, spec);
  std::vector<double> coords = get_opt_coords(q);
  opt.step(coords, grad, eta_learn);
  set_opt_coords(q, coords);
}

std::vector<double> modified_weights(const std::vector<double>& a, const ComponentParams& q,
                                     const FeatureMap& features, const MomentSpec& spec,
                                     double eps) {
  std::vector<double> eta;
  working_moments(q, features, spec, eta);
  std::vector<double> aw(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    aw[m] = a[m] + eps * (spec.weight[m] * (eta[m] - spec.target[m]) - a[m]);
  }
  return aw;
}

ComponentParams propose_jump(const ComponentParams& q, RngStream& rng,
                             const std::vector<double>& mu_lo,
                             const std::vector<double>& mu_hi) {
  ComponentParams cand = q;
  switch (q.family) {
    case Family::Gauss1D:
    case Family::GaussDiag:
      for (std::size_t i = 0; i < cand.mu.size(); ++i) {
        cand.mu[i] = rng.uniform(mu_lo[i], mu_hi[i]);
      }
      return cand;
    case Family::SpinBernoulli:
      for (double& si : cand.s) {
        const double mag = std::abs(si);
        si = rng.uniform() < 0.5 ? mag : -mag;
      }
      return cand;
    case Family::PointMass:
      throw UnsupportedForPointMass("propose_jump");
  }
  return cand;
}

bool jump_move(ComponentParams& q, const std::vector<double>& a, const FeatureMap& features,
               const MomentSpec& spec, RngStream& rng, const std::vector<double>& mu_lo,
               const std::vector<double>& mu_hi) {
  const ComponentParams cand = propose_jump(q, rng, mu_lo, mu_hi);
  // Strict improvement only; ties keep the incumbent.
  if (inner_objective(cand, a, features, spec) < inner_objective(q, a, features, spec)) {
    q = cand;
    return true;
  }
  return false;
}

void herding_weight_update(WeightState& state, const std::vector<double>& eta_working,
                           double entropy_r, const MomentSpec& spec, double eps) {
  for (std::size_t m = 0; m < state.a.size(); ++m) {
    state.a[m] += eps * (spec.weight[m] * (eta_working[m] - spec.target[m]) - state.a[m]);
    state.running_moment[m] += eps * (eta_working[m] - state.running_moment[m]);
  }
  state.running_entropy += eps * (entropy_r - state.running_entropy);
  ++state.step;
}

double tracked_loss(const WeightState& state, const MomentSpec& spec) {
  double sse = 0.0;
  for (std::size_t m = 0; m < state.a.size(); ++m) {
    const double d = state.running_moment[m] - spec.target[m];
    sse += spec.weight[m] * d * d;
  }
  return 0.5 * sse - state.running_entropy;
}

bool metropolis_accept(double delta_f, RngStream& rng) {
  if (delta_f <= 0.0) return true;
  return rng.uniform() < std::exp(-delta_f);
}

namespace {

// Standardized feature table for a finite domain, one row per point.
std::vector<std::vector<double>> domain_features(const std::vector<Point>& domain,
                                                 const FeatureMap& features,
                                                 const MomentSpec& spec) {
  if (domain.empty()) throw EmptyDomain();
  std::vector<std::vector<double>> table(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    table[i].resize(features.size());
    features.eval(domain[i], table[i]);
    for (std::size_t m = 0; m < table[i].size(); ++m) {
      table[i][m] = spec.to_working(m, table[i][m]);
    }
  }
  return table;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t argmin_scan(const std::vector<std::vector<double>>& table,
                        const std::vector<double>& a) {
  std::size_t best = 0;
  double best_val = dot(a, table[0]);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double v = dot(a, table[i]);
    if (v < best_val) {
      best = i;
      best_val = v;
    }
  }
  return best;
}

std::size_t argmax_scan(const std::vector<std::vector<double>>& table,
                        const std::vector<double>& w) {
  std::size_t best = 0;
  double best_val = dot(w, table[0]);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double v = dot(w, table[i]);
    if (v > best_val) {
      best = i;
      best_val = v;
    }
  }
  return best;
}

void track_mu_range(const ComponentParams& q, std::vector<double>& lo, std::vector<double>& hi) {
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    lo[i] = std::min(lo[i], q.mu[i]);
    hi[i] = std::max(hi[i], q.mu[i]);
  }
}

void validate_run_inputs(const FeatureMap& features, const MomentSpec& spec,
                         const HerdingConfig& config, Family family) {
  config.validate();
  spec.validate();
  if (spec.size() != features.size()) {
    throw ConfigError("moment spec and feature map disagree on feature count");
  }
  require_pairing(family, features.kind());
}

}  // namespace

HerdingRun run_entropic(const FeatureMap& features, const MomentSpec& spec,
                        const HerdingConfig& config, const ComponentParams& init,
                        const std::vector<Point>* point_domain) {
  validate_run_inputs(features, spec, config, init.family);
  const bool is_point = init.family == Family::PointMass;
  std::vector<std::vector<double>> table;
  if (is_point) {
    if (point_domain == nullptr || point_domain->empty()) throw EmptyDomain();
    table = domain_features(*point_domain, features, spec);
  }

  RngStream jump_rng(config.seed, "jump");
  ComponentParams cur = init;
  cur.clamp_sigma_floor();

  WeightState st;
  st.running_moment = working_moments(cur, features, spec);
  st.running_entropy = entropy(cur);
  st.a.resize(spec.size());
  for (std::size_t m = 0; m < st.a.size(); ++m) {
    st.a[m] = spec.weight[m] * (st.running_moment[m] - spec.target[m]);
  }

  HerdingRun run(config, spec, features);
  run.initial = TrajectoryStep{0, cur, st.running_moment, st.a, tracked_loss(st, spec),
                               st.running_entropy};
  run.trajectory.reserve(static_cast<std::size_t>(config.t_total()));

  std::vector<double> mu_lo = cur.mu, mu_hi = cur.mu;
  OptimizerState adam;
  std::vector<double> eta;
  for (int t = 1; t <= config.t_total(); ++t) {
    const double eps = config.eps_at(t);
    if (is_point) {
      cur = ComponentParams::point_mass((*point_domain)[argmin_scan(table, st.a)]);
    } else {
      adam.reset(cur.n_opt());
      for (int k = 0; k < config.k_update; ++k) {
        const std::vector<double>& aw =
            config.use_modified_weights ? modified_weights(st.a, cur, features, spec, eps)
                                        : st.a;
        inner_gradient_step(cur, adam, aw, features, spec, config.eta_learn);
        track_mu_range(cur, mu_lo, mu_hi);
        if (config.p_jump > 0.0 && jump_rng.uniform() < config.p_jump) {
          if (jump_move(cur, aw, features, spec, jump_rng, mu_lo, mu_hi)) {
            track_mu_range(cur, mu_lo, mu_hi);
          }
        }
      }
    }
    working_moments(cur, features, spec, eta);
    const double h = entropy(cur);
    herding_weight_update(st, eta, h, spec, eps);
    run.trajectory.push_back(TrajectoryStep{t, cur, eta, st.a, tracked_loss(st, spec), h});
  }
  return run;
}

HerdingRun run_point(const FeatureMap& features, const MomentSpec& spec,
                     const HerdingConfig& config, const std::vector<Point>& domain,
                     const std::vector<double>* w0) {
  validate_run_inputs(features, spec, config, Family::PointMass);
  const std::vector<std::vector<double>> table = domain_features(domain, features, spec);

  std::vector<double> w = w0 != nullptr ? *w0 : std::vector<double>(spec.size(), 0.0);
  if (w.size() != spec.size()) throw ConfigError("run_point: w0 has wrong length");

  WeightState st;
  st.a = w;
  st.running_moment.assign(spec.size(), 0.0);

  HerdingRun run(config, spec, features);
  run.trajectory.reserve(static_cast<std::size_t>(config.t_total()));
  for (int t = 1; t <= config.t_total(); ++t) {
    const std::size_t pick = argmax_scan(table, st.a);
    const std::vector<double>& phi = table[pick];
    for (std::size_t m = 0; m < st.a.size(); ++m) {
      st.a[m] += spec.target[m] - phi[m];
      st.running_moment[m] += (phi[m] - st.running_moment[m]) / static_cast<double>(t);
    }
    ++st.step;
    run.trajectory.push_back(TrajectoryStep{t, ComponentParams::point_mass(domain[pick]), phi,
                                            st.a, tracked_loss(st, spec), 0.0});
  }
  return run;
}

HerdingRun run_point_metropolis(const FeatureMap& features, const MomentSpec& spec,
                                const HerdingConfig& config, const std::vector<Point>& domain) {
  validate_run_inputs(features, spec, config, Family::PointMass);
  const std::vector<std::vector<double>> table = domain_features(domain, features, spec);

  RngStream rng(config.seed, "metropolis");
  std::size_t cur = rng.uniform_int(domain.size());

  WeightState st;
  st.running_moment = table[cur];
  st.a.resize(spec.size());
  for (std::size_t m = 0; m < st.a.size(); ++m) {
    st.a[m] = spec.weight[m] * (st.running_moment[m] - spec.target[m]);
  }

  HerdingRun run(config, spec, features);
  run.initial = TrajectoryStep{0, ComponentParams::point_mass(domain[cur]), st.running_moment,
                               st.a, tracked_loss(st, spec), 0.0};
  run.trajectory.reserve(static_cast<std::size_t>(config.t_total()));
  for (int t = 1; t <= config.t_total(); ++t) {
    const double eps = config.eps_at(t);
    for (int k = 0; k < config.k_update; ++k) {
      const std::size_t cand = rng.uniform_int(domain.size());
      const double df = dot(st.a, table[cand]) - dot(st.a, table[cur]);
      if (metropolis_accept(df, rng)) cur = cand;
    }
    herding_weight_update(st, table[cur], 0.0, spec, eps);
    run.trajectory.push_back(TrajectoryStep{t, ComponentParams::point_mass(domain[cur]),
                                            table[cur], st.a, tracked_loss(st, spec), 0.0});
  }
  return run;
}

std::vector<std::vector<double>> point_equivalence_transform(const HerdingRun& run) {
  if (run.config.epsilon_schedule != EpsSchedule::Harmonic) {
    throw ScheduleMismatch("point equivalence needs the Harmonic eps schedule");
  }
  if (!run.initial.has_value() || run.initial->r.family != Family::PointMass) {
    throw ScheduleMismatch("point equivalence needs an entropic point-family run");
  }
  const double lam = run.spec.weight.at(0);
  for (double w : run.spec.weight) {
    if (w != lam) throw ScheduleMismatch("point equivalence needs equal per-feature weights");
  }
  std::vector<std::vector<double>> out;
  out.reserve(run.trajectory.size() + 1);
  auto transform = [lam](const std::vector<double>& a, int t) {
    std::vector<double> w(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) {
      w[m] = -static_cast<double>(t + 1) / lam * a[m];
    }
    return w;
  };
  out.push_back(transform(run.initial->a, 0));
  for (const TrajectoryStep& s : run.trajectory) out.push_back(transform(s.a, s.t));
  return out;
}

HerdingRun::HerdingRun(HerdingConfig config_, MomentSpec spec_, FeatureMap features_)
    : config(config_), spec(std::move(spec_)), features(std::move(features_)) {}

MixtureModel HerdingRun::output_mixture() const {
  const int n = config.t_output;
  if (static_cast<int>(trajectory.size()) < n) {
    throw std::logic_error("output_mixture: trajectory shorter than t_output");
  }
  std::vector<ComponentParams> comps;
  comps.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = trajectory.size() - static_cast<std::size_t>(n); i < trajectory.size();
       ++i) {
    comps.push_back(trajectory[i].r);
  }
  std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  return MixtureModel(std::move(comps), std::move(w));
}

std::vector<double> HerdingRun::rho_weights(int t) const {
  if (t < 1 || t > static_cast<int>(trajectory.size())) {
    throw std::invalid_argument("rho_weights: step out of range");
  }
  if (!initial.has_value()) {
    return std::vector<double>(static_cast<std::size_t>(t), 1.0 / static_cast<double>(t));
  }
  // rho[u] for components r^(0)..r^(t):
  //   rho[0] = prod_{v=1..t} (1 - eps_v), rho[u] = eps_u * prod_{v=u+1..t} (1 - eps_v).
  std::vector<double> rho(static_cast<std::size_t>(t) + 1);
  double tail = 1.0;
  for (int u = t; u >= 1; --u) {
    rho[static_cast<std::size_t>(u)] = config.eps_at(u) * tail;
    tail *= 1.0 - config.eps_at(u);
  }
  rho[0] = tail;
  double total = 0.0;
  for (double v : rho) total += v;
  for (double& v : rho) v /= total;
  return rho;
}

MixtureModel HerdingRun::mixture_at(int t) const {
  std::vector<double> rho = rho_weights(t);
  std::vector<ComponentParams> comps;
  comps.reserve(rho.size());
  if (initial.has_value()) comps.push_back(initial->r);
  for (int u = 1; u <= t; ++u) comps.push_back(trajectory[static_cast<std::size_t>(u - 1)].r);
  return MixtureModel(std::move(comps), std::move(rho));
}

namespace {

nlohmann::json step_to_json(const TrajectoryStep& s) {
  nlohmann::json j;
  j["t"] = s.t;
  j["params"] = get_opt_coords(s.r).empty() ? s.r.x : get_opt_coords(s.r);
  j["eta"] = s.eta;
  j["a"] = s.a;
  j["ltilde"] = s.ltilde;
  j["entropy"] = s.entropy_r;
  return j;
}

const char* kind_tag(FeatureKind k) {
  switch (k) {
    case FeatureKind::Poly1D: return "poly1d";
    case FeatureKind::SpinPairwise: return "spin_pairwise";
    case FeatureKind::CenteredMoments: return "centered_moments";
  }
  return "?";
}

std::vector<std::string> param_names(const ComponentParams& q) {
  std::vector<std::string> names;
  switch (q.family) {
    case Family::Gauss1D:
    case Family::GaussDiag:
      for (std::size_t i = 0; i < q.mu.size(); ++i) names.push_back("mu" + std::to_string(i));
      for (std::size_t i = 0; i < q.l.size(); ++i) names.push_back("l" + std::to_string(i));
      break;
    case Family::SpinBernoulli:
      for (std::size_t i = 0; i < q.s.size(); ++i) names.push_back("s" + std::to_string(i));
      break;
    case Family::PointMass:
      for (std::size_t i = 0; i < q.x.size(); ++i) names.push_back("x" + std::to_string(i));
      break;
  }
  return names;
}

}  // namespace

std::string HerdingRun::to_json_string(int indent) const {
  nlohmann::json j;
  j["config"] = config.to_kv().entries();
  j["spec"] = spec.to_kv().entries();
  j["features"] = {{"kind", kind_tag(features.kind())}, {"param", features.param()}};
  j["initial"] = initial.has_value() ? step_to_json(*initial) : nlohmann::json(nullptr);
  nlohmann::json steps = nlohmann::json::array();
  for (const TrajectoryStep& s : trajectory) steps.push_back(step_to_json(s));
  j["steps"] = std::move(steps);
  j["output"] = nlohmann::json::parse(output_mixture().to_json_string());
  return j.dump(indent);
}

void HerdingRun::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json_string() << "\n";
}

std::string HerdingRun::trajectory_csv() const {
  std::string csv = "t,ltilde,entropy";
  const ComponentParams& proto = trajectory.empty() ? initial->r : trajectory.front().r;
  for (const std::string& n : param_names(proto)) csv += "," + n;
  for (std::size_t m = 0; m < features.size(); ++m) csv += ",eta:" + features.name(m);
  for (std::size_t m = 0; m < features.size(); ++m) csv += ",a:" + features.name(m);
  csv += "\n";
  auto emit = [&](const TrajectoryStep& s) {
    csv += std::to_string(s.t);
    csv += "," + format_double(s.ltilde);
    csv += "," + format_double(s.entropy_r);
    const std::vector<double> coords =
        s.r.family == Family::PointMass ? s.r.x : get_opt_coords(s.r);
    for (double c : coords) csv += "," + format_double(c);
    for (double e : s.eta) csv += "," + format_double(e);
    for (double a : s.a) csv += "," + format_double(a);
    csv += "\n";
  };
  if (initial.has_value()) emit(*initial);
  for (const TrajectoryStep& s : trajectory) emit(s);
  return csv;
}

void HerdingRun::save_trajectory_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << trajectory_csv();
}

}  // namespace entroherd
