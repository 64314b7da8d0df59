#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "entroherd/families.hpp"
#include "entroherd/features.hpp"

namespace entroherd {

// Finite mixture over one component family. Components are stored in
// trajectory order so the running mixture at any step is reconstructible
// from a saved file.
class MixtureModel {
 public:
  MixtureModel(std::vector<ComponentParams> components, std::vector<double> weights);

  Family family() const { return family_; }
  int dim() const { return dim_; }
  std::size_t n_components() const { return components_.size(); }
  const std::vector<ComponentParams>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }

  // Log density for Gaussian mixtures, log mass for spin / point-mass
  // mixtures; max-shifted log-sum-exp inside.
  double log_density(std::span<const double> x) const;

  std::vector<Point> sample(std::size_t n, std::uint64_t seed) const;

  // Mixture of the i-th marginals reweighted by the likelihood of the
  // observed coordinates (entry i of `observed` is ignored). GaussDiag only.
  MixtureModel conditional_univariate(int i, std::span<const double> observed) const;

  // Univariate Gaussian mixtures only.
  double cdf(double x) const;
  double quantile(double prob, double tol = 1e-8) const;

  // Exact entropy for discrete mixtures: spin mixtures enumerate {-1,+1}^n
  // (n <= 20), point-mass mixtures aggregate their support.
  double entropy_exact_discrete() const;
  // Monte-Carlo entropy estimate (value, standard error) for continuous
  // mixtures.
  std::pair<double, double> entropy_mc(std::size_t n, std::uint64_t seed) const;

  std::string to_json_string(int indent = 2) const;
  static MixtureModel from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static MixtureModel load(const std::string& path);

 private:
  Family family_;
  int dim_;
  std::vector<ComponentParams> components_;
  std::vector<double> weights_;
};

// Working/raw mixture moments are the weight-averaged component moments.
std::vector<double> mixture_feature_moments(const MixtureModel& model,
                                            const FeatureMap& features);

}  // namespace entroherd
