#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "entroherd/features.hpp"
#include "entroherd/rng.hpp"

namespace entroherd {

enum class Family { Gauss1D, GaussDiag, SpinBernoulli, PointMass };

constexpr double kSigmaFloor = 0.01;
// Floor applied in log space: l is clamped to exactly this value.
double sigma_floor_log();

// Parameters of one mixture component. Gaussians store log standard
// deviations (l = log sigma) because that is the coordinate the optimizer
// moves in; spins store logits s with p = 1/(1+exp(-s)).
struct ComponentParams {
  Family family = Family::Gauss1D;
  std::vector<double> mu;  // Gauss means
  std::vector<double> l;   // Gauss log-sigmas
  std::vector<double> s;   // spin logits
  std::vector<double> x;   // point-mass location

  static ComponentParams gauss1d(double mu, double sigma);
  static ComponentParams gauss_diag(std::vector<double> mu, std::vector<double> sigma);
  static ComponentParams spin_bernoulli(std::vector<double> p);
  static ComponentParams spin_logits(std::vector<double> s);
  static ComponentParams point_mass(Point x);

  int dim() const;
  double sigma(std::size_t i) const;
  double p_up(std::size_t i) const;  // P(x_i = +1)
  double spin_mean(std::size_t i) const;  // E[x_i] = tanh(s_i/2)
  // Number of coordinates the inner optimizer updates (0 for point masses).
  std::size_t n_opt() const;
  void clamp_sigma_floor();
  bool operator==(const ComponentParams& o) const = default;
};

bool supported_pairing(Family family, FeatureKind kind);
void require_pairing(Family family, FeatureKind kind);

// Raw (unstandardized) feature moments eta_m = E_q[phi_m].
void feature_moments(const ComponentParams& q, const FeatureMap& features,
                     std::span<double> out);
std::vector<double> feature_moments(const ComponentParams& q, const FeatureMap& features);

// d eta_m / d theta_k, row-major M x n_opt. Gaussians differentiate with
// respect to (mu..., l...); spins with respect to p (the sigmoid Jacobian
// factor is deliberately dropped, matching the update actually used).
std::vector<double> moment_jacobian(const ComponentParams& q, const FeatureMap& features);

double entropy(const ComponentParams& q);
std::vector<double> entropy_gradient(const ComponentParams& q);

Point sample(const ComponentParams& q, RngStream& rng);

// Log density for Gaussians; log mass for spins. Point masses answer only
// log mass (0 / -inf by exact coordinate match) via log_mass below;
// log_density throws UnsupportedForPointMass.
double log_density(const ComponentParams& q, std::span<const double> x);
double log_mass_point(const ComponentParams& q, std::span<const double> x);

}  // namespace entroherd
