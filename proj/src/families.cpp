#include "entroherd/families.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "entroherd/errors.hpp"
#include "entroherd/numeric.hpp"

namespace entroherd {

namespace {
constexpr double kHalfLog2PiE = 1.4189385332046727418;  // 0.5*(log(2*pi)+1)
}

double sigma_floor_log() {
  static const double v = std::log(kSigmaFloor);
  return v;
}

ComponentParams ComponentParams::gauss1d(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gauss1d: sigma must be positive");
  ComponentParams q;
  q.family = Family::Gauss1D;
  q.mu = {mu};
  q.l = {std::log(sigma)};
  q.clamp_sigma_floor();
  return q;
}

ComponentParams ComponentParams::gauss_diag(std::vector<double> mu, std::vector<double> sigma) {
  if (mu.size() != sigma.size() || mu.empty()) {
    throw std::invalid_argument("gauss_diag: mu/sigma size mismatch");
  }
  ComponentParams q;
  q.family = Family::GaussDiag;
  q.mu = std::move(mu);
  q.l.resize(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::invalid_argument("gauss_diag: sigma must be positive");
    q.l[i] = std::log(sigma[i]);
  }
  q.clamp_sigma_floor();
  return q;
}

ComponentParams ComponentParams::spin_bernoulli(std::vector<double> p) {
  ComponentParams q;
  q.family = Family::SpinBernoulli;
  q.s.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0)) {
      throw std::invalid_argument("spin_bernoulli: p must be in (0, 1)");
    }
    q.s[i] = std::log(p[i] / (1.0 - p[i]));
  }
  return q;
}

ComponentParams ComponentParams::spin_logits(std::vector<double> s) {
  ComponentParams q;
  q.family = Family::SpinBernoulli;
  q.s = std::move(s);
  return q;
}

ComponentParams ComponentParams::point_mass(Point x) {
  ComponentParams q;
  q.family = Family::PointMass;
  q.x = std::move(x);
  return q;
}

int ComponentParams::dim() const {
  switch (family) {
    case Family::Gauss1D: return 1;
    case Family::GaussDiag: return static_cast<int>(mu.size());
    case Family::SpinBernoulli: return static_cast<int>(s.size());
    case Family::PointMass: return static_cast<int>(x.size());
  }
  return 0;
}

double ComponentParams::sigma(std::size_t i) const { return std::exp(l.at(i)); }

double ComponentParams::p_up(std::size_t i) const { return 1.0 / (1.0 + std::exp(-s.at(i))); }

double ComponentParams::spin_mean(std::size_t i) const { return std::tanh(0.5 * s.at(i)); }

std::size_t ComponentParams::n_opt() const {
  switch (family) {
    case Family::Gauss1D:
    case Family::GaussDiag: return 2 * mu.size();
    case Family::SpinBernoulli: return s.size();
    case Family::PointMass: return 0;
  }
  return 0;
}

void ComponentParams::clamp_sigma_floor() {
  const double floor = sigma_floor_log();
  for (double& li : l) {
    if (li < floor) li = floor;
  }
}

bool supported_pairing(Family family, FeatureKind kind) {
  switch (family) {
    case Family::Gauss1D: return kind == FeatureKind::Poly1D;
    case Family::GaussDiag: return kind == FeatureKind::CenteredMoments;
    case Family::SpinBernoulli: return kind == FeatureKind::SpinPairwise;
    case Family::PointMass: return true;
  }
  return false;
}

void require_pairing(Family family, FeatureKind kind) {
  if (!supported_pairing(family, kind)) {
    throw UnsupportedPairing("no analytic moments for this family/feature combination");
  }
}

namespace {

// E[x^k] for N(mu, sigma^2) via m_k = mu*m_{k-1} + (k-1)*sigma^2*m_{k-2}.
void gauss_power_moments(double mu, double var, int max_degree, std::vector<double>& m) {
  m.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
  m[0] = 1.0;
  if (max_degree >= 1) m[1] = mu;
  for (int k = 2; k <= max_degree; ++k) {
    m[k] = mu * m[k - 1] + static_cast<double>(k - 1) * var * m[k - 2];
  }
}

}  // namespace

void feature_moments(const ComponentParams& q, const FeatureMap& features,
                     std::span<double> out) {
  require_pairing(q.family, features.kind());
  if (out.size() != features.size()) {
    throw std::invalid_argument("feature_moments: output span has wrong size");
  }
  switch (q.family) {
    case Family::PointMass: {
      features.eval(q.x, out);
      return;
    }
    case Family::Gauss1D: {
      std::vector<double> m;
      const double var = q.sigma(0) * q.sigma(0);
      gauss_power_moments(q.mu[0], var, features.param(), m);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = m[k + 1];
      return;
    }
    case Family::GaussDiag: {
      const auto& ids = features.ids();
      for (std::size_t m = 0; m < ids.size(); ++m) {
        const FeatureId& id = ids[m];
        const double mu_i = q.mu[id.i];
        const double var_i = q.sigma(id.i) * q.sigma(id.i);
        switch (id.order) {
          case 1:
            out[m] = mu_i;
            break;
          case 2:
            out[m] = id.i == id.j ? mu_i * mu_i + var_i : mu_i * q.mu[id.j];
            break;
          case 3:
            out[m] = mu_i * mu_i * mu_i + 3.0 * mu_i * var_i;
            break;
          default:
            out[m] = mu_i * mu_i * mu_i * mu_i + 6.0 * mu_i * mu_i * var_i +
                     3.0 * var_i * var_i;
            break;
        }
      }
      return;
    }
    case Family::SpinBernoulli: {
      const int n = features.param();
      std::vector<double> mean(n);
      for (int i = 0; i < n; ++i) mean[i] = q.spin_mean(i);
      const auto& ids = features.ids();
      for (std::size_t m = 0; m < ids.size(); ++m) {
        out[m] = mean[ids[m].i] * mean[ids[m].j];
      }
      return;
    }
  }
}

std::vector<double> feature_moments(const ComponentParams& q, const FeatureMap& features) {
  std::vector<double> out(features.size());
  feature_moments(q, features, out);
  return out;
}

std::vector<double> moment_jacobian(const ComponentParams& q, const FeatureMap& features) {
  require_pairing(q.family, features.kind());
  const std::size_t M = features.size();
  const std::size_t P = q.n_opt();
  std::vector<double> jac(M * P, 0.0);
  switch (q.family) {
    case Family::PointMass:
      return jac;  // no optimizer coordinates
    case Family::Gauss1D: {
      std::vector<double> m;
      const double var = q.sigma(0) * q.sigma(0);
      gauss_power_moments(q.mu[0], var, features.param(), m);
      for (std::size_t row = 0; row < M; ++row) {
        const int k = static_cast<int>(row) + 1;
        jac[row * P + 0] = static_cast<double>(k) * m[k - 1];
        jac[row * P + 1] =
            k >= 2 ? static_cast<double>(k) * static_cast<double>(k - 1) * var * m[k - 2] : 0.0;
      }
      return jac;
    }
    case Family::GaussDiag: {
      const std::size_t n = q.mu.size();
      const auto& ids = features.ids();
      for (std::size_t row = 0; row < M; ++row) {
        const FeatureId& id = ids[row];
        const double mu_i = q.mu[id.i];
        const double var_i = q.sigma(id.i) * q.sigma(id.i);
        double* r = &jac[row * P];
        switch (id.order) {
          case 1:
            r[id.i] = 1.0;
            break;
          case 2:
            if (id.i == id.j) {
              r[id.i] = 2.0 * mu_i;
              r[n + id.i] = 2.0 * var_i;
            } else {
              r[id.i] = q.mu[id.j];
              r[id.j] = mu_i;
            }
            break;
          case 3:
            r[id.i] = 3.0 * mu_i * mu_i + 3.0 * var_i;
            r[n + id.i] = 6.0 * mu_i * var_i;
            break;
          default:
            r[id.i] = 4.0 * mu_i * mu_i * mu_i + 12.0 * mu_i * var_i;
            r[n + id.i] = 12.0 * var_i * (mu_i * mu_i + var_i);
            break;
        }
      }
      return jac;
    }
    case Family::SpinBernoulli: {
      // d eta_ij / d p_i = 2 * E[x_j] (eta = (2p_i-1)(2p_j-1); the sigmoid
      // Jacobian toward the logit is dropped on purpose).
      const int n = features.param();
      std::vector<double> mean(n);
      for (int i = 0; i < n; ++i) mean[i] = q.spin_mean(i);
      const auto& ids = features.ids();
      for (std::size_t row = 0; row < M; ++row) {
        jac[row * P + ids[row].i] = 2.0 * mean[ids[row].j];
        jac[row * P + ids[row].j] = 2.0 * mean[ids[row].i];
      }
      return jac;
    }
  }
  return jac;
}

double entropy(const ComponentParams& q) {
  switch (q.family) {
    case Family::PointMass:
      return 0.0;
    case Family::Gauss1D:
    case Family::GaussDiag: {
      double h = 0.0;
      for (double li : q.l) h += kHalfLog2PiE + li;
      return h;
    }
    case Family::SpinBernoulli: {
      double h = 0.0;
      for (double si : q.s) {
        const double p = 1.0 / (1.0 + std::exp(-si));
        h += p * softplus(-si) + (1.0 - p) * softplus(si);
      }
      return h;
    }
  }
  return 0.0;
}

std::vector<double> entropy_gradient(const ComponentParams& q) {
  std::vector<double> g(q.n_opt(), 0.0);
  switch (q.family) {
    case Family::PointMass:
      break;
    case Family::Gauss1D:
    case Family::GaussDiag:
      for (std::size_t i = 0; i < q.l.size(); ++i) g[q.mu.size() + i] = 1.0;
      break;
    case Family::SpinBernoulli:
      // dH/dp = log((1-p)/p) = -s, exactly.
      for (std::size_t i = 0; i < q.s.size(); ++i) g[i] = -q.s[i];
      break;
  }
  return g;
}

Point sample(const ComponentParams& q, RngStream& rng) {
  switch (q.family) {
    case Family::PointMass:
      return q.x;
    case Family::Gauss1D:
    case Family::GaussDiag: {
      Point x(q.mu.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = q.mu[i] + q.sigma(i) * rng.normal();
      return x;
    }
    case Family::SpinBernoulli: {
      Point x(q.s.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform() < q.p_up(i) ? 1.0 : -1.0;
      }
      return x;
    }
  }
  return {};
}

double log_density(const ComponentParams& q, std::span<const double> x) {
  if (static_cast<int>(x.size()) != q.dim()) {
    throw std::invalid_argument("log_density: point has wrong dimension");
  }
  switch (q.family) {
    case Family::PointMass:
      throw UnsupportedForPointMass("log_density");
    case Family::Gauss1D:
    case Family::GaussDiag: {
      double lp = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        lp += normal_log_pdf(x[i], q.mu[i], q.sigma(i));
      }
      return lp;
    }
    case Family::SpinBernoulli: {
      double lp = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        lp += x[i] > 0.0 ? -softplus(-q.s[i]) : -softplus(q.s[i]);
      }
      return lp;
    }
  }
  return 0.0;
}

double log_mass_point(const ComponentParams& q, std::span<const double> x) {
  if (q.family != Family::PointMass) {
    throw std::invalid_argument("log_mass_point: component is not a point mass");
  }
  if (x.size() != q.x.size()) {
    throw std::invalid_argument("log_mass_point: point has wrong dimension");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != q.x[i]) return -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

}  // namespace entroherd
