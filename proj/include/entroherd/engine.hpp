#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entroherd/config.hpp"
#include "entroherd/families.hpp"
#include "entroherd/features.hpp"
#include "entroherd/mixture.hpp"
#include "entroherd/moment_spec.hpp"
#include "entroherd/rng.hpp"

namespace entroherd {

// Adam with bias correction; reset at the start of every outer step so each
// inner optimization starts from clean moment estimates.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-8;

  void reset(std::size_t n);
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

// Herding weights a plus the exponentially tracked mixture statistics.
// With the same eps sequence feeding every field,
// a_m = weight_m * (running_moment_m - target_m) holds identically.
struct WeightState {
  std::vector<double> a;
  std::vector<double> running_moment;
  double running_entropy = 0.0;
  int step = 0;
};

struct TrajectoryStep {
  int t = 0;
  ComponentParams r;
  std::vector<double> eta;  // working-coordinate moments of r
  std::vector<double> a;    // weights after this step's update
  double ltilde = 0.0;      // tracked loss bound
  double entropy_r = 0.0;
};

class HerdingRun {
 public:
  HerdingRun(HerdingConfig config, MomentSpec spec, FeatureMap features);

  HerdingConfig config;
  MomentSpec spec;
  FeatureMap features;
  std::optional<TrajectoryStep> initial;  // r^(0); absent for classic point runs
  std::vector<TrajectoryStep> trajectory;

  // Uniform mixture over the last t_output components.
  MixtureModel output_mixture() const;
  // The tracked mixture p^(T): components r^(0..T) with the weights the eps
  // schedule implies (r^(1..T) uniform when there is no r^(0)).
  MixtureModel mixture_at(int t) const;
  std::vector<double> rho_weights(int t) const;

  std::string to_json_string(int indent = 2) const;
  void save_json(const std::string& path) const;
  std::string trajectory_csv() const;
  void save_trajectory_csv(const std::string& path) const;
};

// Working-coordinate moments of q: raw analytic moments pushed through the
// spec's standardization.
void working_moments(const ComponentParams& q, const FeatureMap& features,
                     const MomentSpec& spec, std::vector<double>& out);
std::vector<double> working_moments(const ComponentParams& q, const FeatureMap& features,
                                    const MomentSpec& spec);

// F_a(q) = sum_m a_m eta_m(q) - H(q) in working coordinates.
double inner_objective(const ComponentParams& q, const std::vector<double>& a,
                       const FeatureMap& features, const MomentSpec& spec);

// Gradient of F_a with respect to the optimizer coordinates.
std::vector<double> inner_gradient(const ComponentParams& q, const std::vector<double>& a,
                                   const FeatureMap& features, const MomentSpec& spec);

// One Adam step on q (sigma floor re-applied afterwards).
void inner_gradient_step(ComponentParams& q, OptimizerState& opt, const std::vector<double>& a,
                         const FeatureMap& features, const MomentSpec& spec, double eta_learn);

// a' = a + eps*(weight*(eta(q_cur) - target) - a), recomputed every inner step.
std::vector<double> modified_weights(const std::vector<double>& a, const ComponentParams& q,
                                     const FeatureMap& features, const MomentSpec& spec,
                                     double eps);

std::vector<double> get_opt_coords(const ComponentParams& q);
void set_opt_coords(ComponentParams& q, const std::vector<double>& coords);

// Random restart proposal: Gaussians redraw each mean uniformly inside the
// per-coordinate range seen so far (log-sigmas kept); spins re-randomize the
// sign of each logit. Accepted only on strict improvement of F_a.
ComponentParams propose_jump(const ComponentParams& q, RngStream& rng,
                             const std::vector<double>& mu_lo, const std::vector<double>& mu_hi);
bool jump_move(ComponentParams& q, const std::vector<double>& a, const FeatureMap& features,
               const MomentSpec& spec, RngStream& rng, const std::vector<double>& mu_lo,
               const std::vector<double>& mu_hi);

// a <- a + eps*(weight*(eta - target) - a), plus the tracked-moment and
// tracked-entropy recursions with the same eps.
void herding_weight_update(WeightState& state, const std::vector<double>& eta_working,
                           double entropy_r, const MomentSpec& spec, double eps);

// 0.5*sum_m weight_m*(running_moment_m - target_m)^2 - running_entropy.
double tracked_loss(const WeightState& state, const MomentSpec& spec);

bool metropolis_accept(double delta_f, RngStream& rng);

// Entropic herding. For point-mass families the inner problem is solved
// exactly by scanning `point_domain`.
HerdingRun run_entropic(const FeatureMap& features, const MomentSpec& spec,
                        const HerdingConfig& config, const ComponentParams& init,
                        const std::vector<Point>* point_domain = nullptr);

// Classic point herding: x = argmax_x sum_m w_m phi_m(x) over the finite
// domain, then w += target - phi(x). w0 defaults to zeros.
HerdingRun run_point(const FeatureMap& features, const MomentSpec& spec,
                     const HerdingConfig& config, const std::vector<Point>& domain,
                     const std::vector<double>* w0 = nullptr);

// Point herding with Metropolis inner steps: k_update uniform proposals per
// outer step, accepted with min(1, exp(-dF)); entropic-style weight updates.
HerdingRun run_point_metropolis(const FeatureMap& features, const MomentSpec& spec,
                                const HerdingConfig& config, const std::vector<Point>& domain);

// Maps an entropic point-family run with Harmonic eps and equal weights onto
// the classic herding weight sequence: w'[T] = -(T+1)/Lambda * a^(T).
std::vector<std::vector<double>> point_equivalence_transform(const HerdingRun& run);

}  // namespace entroherd
