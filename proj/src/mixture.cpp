#include "entroherd/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "entroherd/kv.hpp"
#include "entroherd/errors.hpp"
#include "entroherd/numeric.hpp"

namespace entroherd {

namespace {

const char* family_tag(Family f) {
  switch (f) {
    case Family::Gauss1D: return "gauss1d";
    case Family::GaussDiag: return "gauss_diag";
    case Family::SpinBernoulli: return "spin_bernoulli";
    case Family::PointMass: return "point_mass";
  }
  return "?";
}

Family parse_family_tag(const std::string& tag) {
  if (tag == "gauss1d") return Family::Gauss1D;
  if (tag == "gauss_diag") return Family::GaussDiag;
  if (tag == "spin_bernoulli") return Family::SpinBernoulli;
  if (tag == "point_mass") return Family::PointMass;
  throw ConfigError("unknown family tag '" + tag + "'");
}

std::vector<double> component_param_vector(const ComponentParams& c) {
  switch (c.family) {
    case Family::Gauss1D:
    case Family::GaussDiag: {
      std::vector<double> v = c.mu;
      v.insert(v.end(), c.l.begin(), c.l.end());
      return v;
    }
    case Family::SpinBernoulli: return c.s;
    case Family::PointMass: return c.x;
  }
  return {};
}

ComponentParams component_from_params(Family f, const std::vector<double>& v) {
  ComponentParams c;
  c.family = f;
  switch (f) {
    case Family::Gauss1D:
    case Family::GaussDiag: {
      if (v.size() % 2 != 0 || v.empty()) {
        throw ConfigError("gaussian component needs an even parameter count");
      }
      const std::size_t n = v.size() / 2;
      c.mu.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
      c.l.assign(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
      break;
    }
    case Family::SpinBernoulli: c.s = v; break;
    case Family::PointMass: c.x = v; break;
  }
  return c;
}

}  // namespace

MixtureModel::MixtureModel(std::vector<ComponentParams> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  if (components_.size() != weights_.size()) {
    throw ConfigError("mixture: component/weight count mismatch");
  }
  family_ = components_[0].family;
  dim_ = components_[0].dim();
  double total = 0.0;
  for (std::size_t t = 0; t < components_.size(); ++t) {
    if (components_[t].family != family_ || components_[t].dim() != dim_) {
      throw ConfigError("mixture: components disagree on family or dimension");
    }
    if (!(weights_[t] >= 0.0)) throw ConfigError("mixture: weights must be non-negative");
    total += weights_[t];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("mixture: weights must sum to 1 within 1e-12");
  }
}

double MixtureModel::log_density(std::span<const double> x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t t = 0; t < components_.size(); ++t) {
    if (weights_[t] == 0.0) {
      terms[t] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double lc = family_ == Family::PointMass ? log_mass_point(components_[t], x)
                                                   : entroherd::log_density(components_[t], x);
    terms[t] = std::log(weights_[t]) + lc;
  }
  return log_sum_exp(terms);
}

std::vector<Point> MixtureModel::sample(std::size_t n, std::uint64_t seed) const {
  RngStream rng(seed, "sample");
  std::vector<double> cum(weights_.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < weights_.size(); ++t) {
    acc += weights_[t];
    cum[t] = acc;
  }
  cum.back() = 1.0;
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform();
    const std::size_t t = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    out.push_back(entroherd::sample(components_[t], rng));
  }
  return out;
}

MixtureModel MixtureModel::conditional_univariate(int i, std::span<const double> observed) const {
  if (family_ != Family::GaussDiag && family_ != Family::Gauss1D) {
    throw UnsupportedForPointMass("conditional_univariate needs a Gaussian mixture");
  }
  if (i < 0 || i >= dim_) throw std::invalid_argument("conditional_univariate: bad index");
  if (static_cast<int>(observed.size()) != dim_) {
    throw std::invalid_argument("conditional_univariate: observed must have full dimension");
  }
  // Log-space reweighting by the likelihood of the observed coordinates.
  std::vector<double> logw(components_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < components_.size(); ++t) {
    double lw = weights_[t] > 0.0 ? std::log(weights_[t])
                                  : -std::numeric_limits<double>::infinity();
    const ComponentParams& c = components_[t];
    for (int j = 0; j < dim_; ++j) {
      if (j == i) continue;
      lw += normal_log_pdf(observed[j], c.mu[j], c.sigma(j));
    }
    logw[t] = lw;
    best = std::max(best, lw);
  }
  if (!std::isfinite(best)) {
    throw AllWeightsVanish("max log-weight = " + format_double(best));
  }
  const double lz = log_sum_exp(logw);
  std::vector<ComponentParams> comps;
  std::vector<double> w(components_.size());
  comps.reserve(components_.size());
  for (std::size_t t = 0; t < components_.size(); ++t) {
    comps.push_back(ComponentParams::gauss1d(components_[t].mu[i], components_[t].sigma(i)));
    w[t] = std::exp(logw[t] - lz);
  }
  // Renormalize away the last-ulp drift so the constructor's 1e-12 gate holds.
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return MixtureModel(std::move(comps), std::move(w));
}

double MixtureModel::cdf(double x) const {
  if (dim_ != 1 || (family_ != Family::Gauss1D && family_ != Family::GaussDiag)) {
    throw std::invalid_argument("cdf: univariate Gaussian mixtures only");
  }
  double f = 0.0;
  for (std::size_t t = 0; t < components_.size(); ++t) {
    f += weights_[t] * normal_cdf((x - components_[t].mu[0]) / components_[t].sigma(0));
  }
  return f;
}

double MixtureModel::quantile(double prob, double tol) const {
  if (dim_ != 1 || (family_ != Family::Gauss1D && family_ != Family::GaussDiag)) {
    throw std::invalid_argument("quantile: univariate Gaussian mixtures only");
  }
  if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("quantile: prob in (0,1)");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const ComponentParams& c : components_) {
    lo = std::min(lo, c.mu[0] - 10.0 * c.sigma(0));
    hi = std::max(hi, c.mu[0] + 10.0 * c.sigma(0));
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = cdf(mid);
    if (std::abs(f - prob) <= tol) break;
    if (f < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double MixtureModel::entropy_exact_discrete() const {
  if (family_ == Family::SpinBernoulli) {
    const int n = dim_;
    if (n > 20) throw StateSpaceTooLarge("spin entropy enumeration limited to n <= 20");
    CompensatedSum h;
    Point x(static_cast<std::size_t>(n));
    const std::size_t states = std::size_t{1} << n;
    for (std::size_t idx = 0; idx < states; ++idx) {
      for (int b = 0; b < n; ++b) x[b] = (idx >> b) & 1 ? 1.0 : -1.0;
      const double lp = log_density(x);
      if (std::isfinite(lp)) h.add(-std::exp(lp) * lp);
    }
    return h.value();
  }
  if (family_ == Family::PointMass) {
    // Aggregate mass over distinct support points (exact coordinate match).
    std::map<Point, double> mass;
    for (std::size_t t = 0; t < components_.size(); ++t) {
      mass[components_[t].x] += weights_[t];
    }
    CompensatedSum h;
    for (const auto& [pt, p] : mass) {
      if (p > 0.0) h.add(-p * std::log(p));
    }
    return h.value();
  }
  throw std::invalid_argument("entropy_exact_discrete: discrete mixtures only");
}

std::pair<double, double> MixtureModel::entropy_mc(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw std::invalid_argument("entropy_mc: need at least one draw");
  const std::vector<Point> xs = sample(n, seed);
  std::vector<double> nll(n);
  for (std::size_t k = 0; k < n; ++k) nll[k] = -log_density(xs[k]);
  const double est = mean_of(nll);
  const double se = population_std(nll) / std::sqrt(static_cast<double>(n));
  return {est, se};
}

std::string MixtureModel::to_json_string(int indent) const {
  nlohmann::json j;
  j["family"] = family_tag(family_);
  j["dim"] = dim_;
  j["weights"] = weights_;
  nlohmann::json comps = nlohmann::json::array();
  for (const ComponentParams& c : components_) {
    comps.push_back({{"variant", family_tag(c.family)},
                     {"params", component_param_vector(c)}});
  }
  j["components"] = std::move(comps);
  return j.dump(indent);
}

MixtureModel MixtureModel::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("mixture JSON parse error: ") + e.what());
  }
  try {
    const Family fam = parse_family_tag(j.at("family").get<std::string>());
    std::vector<double> weights = j.at("weights").get<std::vector<double>>();
    std::vector<ComponentParams> comps;
    for (const auto& jc : j.at("components")) {
      const Family cf = parse_family_tag(jc.at("variant").get<std::string>());
      if (cf != fam) throw ConfigError("mixture JSON: component variant mismatch");
      comps.push_back(component_from_params(cf, jc.at("params").get<std::vector<double>>()));
    }
    MixtureModel model(std::move(comps), std::move(weights));
    if (model.dim() != j.at("dim").get<int>()) {
      throw ConfigError("mixture JSON: dim field disagrees with components");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mixture JSON structure error: ") + e.what());
  }
}

void MixtureModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json_string() << "\n";
}

MixtureModel MixtureModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

std::vector<double> mixture_feature_moments(const MixtureModel& model,
                                            const FeatureMap& features) {
  std::vector<double> out(features.size(), 0.0);
  std::vector<double> eta(features.size());
  for (std::size_t t = 0; t < model.n_components(); ++t) {
    feature_moments(model.components()[t], features, eta);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] += model.weights()[t] * eta[m];
  }
  return out;
}

}  // namespace entroherd
