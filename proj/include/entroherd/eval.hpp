#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "entroherd/features.hpp"
#include "entroherd/mixture.hpp"
#include "entroherd/moment_spec.hpp"

namespace entroherd {

// Enumerable state space: either the spin cube {-1,+1}^n or an explicit
// point list. Hard cap 2^20 states.
class Domain {
 public:
  static Domain spin(int n);
  static Domain points(std::vector<Point> pts);

  std::size_t size() const;
  int dim() const { return dim_; }
  bool is_spin() const { return spin_n_ >= 0; }
  void state(std::size_t idx, Point& out) const;
  Point state(std::size_t idx) const;
  std::vector<Point> materialize() const;

 private:
  Domain() = default;
  int spin_n_ = -1;
  int dim_ = 0;
  std::vector<Point> points_;
};

// Gibbs distribution pi(x) proportional to exp(-sum_m theta_m phi_m(x)),
// fully enumerated. Features are taken in the spec's working coordinates;
// pass a direct spec (or none) for raw features.
struct GibbsModel {
  FeatureMap features;
  std::vector<double> theta;
  MomentSpec spec;
  Domain domain;
  double log_z = 0.0;
  std::vector<double> prob;     // normalized, domain order
  std::vector<double> moments;  // working-coordinate E[phi]
  double entropy = 0.0;
};

GibbsModel enumerate_gibbs(const FeatureMap& features, const std::vector<double>& theta,
                           const Domain& domain, const MomentSpec* spec = nullptr);

MomentSpec standardize_from_model(const FeatureMap& features, const GibbsModel& model,
                                  double lambda);

// KL(p || q) over a shared state enumeration. Infinite KL (q zero where p
// is not) is a flagged value, not an error.
struct KlResult {
  double nats = 0.0;
  bool finite = true;
  std::size_t zero_q_states = 0;
};
KlResult kl_discrete(const std::vector<double>& p, const std::vector<double>& q);

// Mixture mass per enumerated state.
std::vector<double> mixture_prob_table(const MixtureModel& model, const Domain& domain);

// L(p) = 0.5*sum_m weight_m*(eta_m(p) - target_m)^2 - H(p), working
// coordinates, exact entropy.
double loss_from_table(const std::vector<double>& prob, const FeatureMap& features,
                       const MomentSpec& spec, const Domain& domain);
double loss_L(const MixtureModel& model, const FeatureMap& features, const MomentSpec& spec);

// sum_m (eta_m(p) - target_m)^2 in working coordinates.
double moment_sse(const MixtureModel& model, const FeatureMap& features,
                  const MomentSpec& spec);

// Decomposition of the gap between true mixture entropy and the weighted
// average of component entropies: gap = H_rho - E_p[H_c], where H_rho is the
// mixing-weight entropy and H_c the conditional component-identity entropy.
struct EntropyGap {
  double h_exact = 0.0;
  double h_tilde = 0.0;
  double gap = 0.0;
  double h_rho = 0.0;
  double mean_hc = 0.0;
  double residual = 0.0;  // gap - (h_rho - mean_hc); identity check
};
EntropyGap entropy_gap(const MixtureModel& model, const Domain& domain);

// Damped fixed-point iteration theta <- (1-alpha)*theta +
// alpha*weight*(eta(pi_theta) - target) on an enumerable domain.
struct FixedPointResult {
  std::vector<double> theta;
  double residual = 0.0;
  int iterations = 0;
  GibbsModel model;
  double loss = 0.0;
};
FixedPointResult fixed_point_solve(const FeatureMap& features, const MomentSpec& spec,
                                   const Domain& domain, double alpha = 0.1,
                                   double tol = 1e-10, int max_iter = 100000);

// Closed form for the two-feature (x, x^2) Gaussian case with target mean 0:
// theta_1 = 0, 2*theta_2^2 + 2*w2*t2*theta_2 - w2 = 0.
std::vector<double> fixed_point_gauss1d(const MomentSpec& spec);

// Binned total-variation distance between a 1-D mixture and a target given
// by its unnormalized log density (normalized over [lo, hi] by quadrature).
// Mass outside the range counts as one extra bin.
struct HistogramCompare {
  std::vector<double> edges;
  std::vector<double> mass_model;
  std::vector<double> mass_target;
  double outside_model = 0.0;
  double outside_target = 0.0;
  double tv = 0.0;
};
HistogramCompare histogram_compare(const MixtureModel& model,
                                   const std::function<double(double)>& target_log_unnorm,
                                   double lo, double hi, double bin_width);

// Scatter export: one row per state with target/model/empirical mass.
std::string gibbs_scatter_csv(const GibbsModel& target, const std::vector<double>& p_model,
                              const std::vector<double>& p_empirical);

}  // namespace entroherd
