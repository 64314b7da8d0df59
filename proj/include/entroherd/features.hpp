#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace entroherd {

using Point = std::vector<double>;

enum class FeatureKind { Poly1D, SpinPairwise, CenteredMoments };

// One feature is identified by (order, i, j); j < 0 for unary features.
//  Poly1D:          order = k in 1..max_degree, phi(x) = x^k
//  SpinPairwise:    order = 2, pairs i < j, phi(x) = x_i * x_j on {-1,+1}^n
//  CenteredMoments: order 1..4: x_i, x_i*x_j (i <= j), x_i^3, x_i^4.
//                   Variables are expected to be centered upstream
//                   (z-scored), so the features themselves are monomials.
struct FeatureId {
  int order = 0;
  int i = 0;
  int j = -1;
};

class FeatureMap {
 public:
  static FeatureMap poly1d(int max_degree);
  static FeatureMap spin_pairwise(int n_spins);
  static FeatureMap centered_moments(int n_vars);

  FeatureKind kind() const { return kind_; }
  // max_degree / n_spins / n_vars, depending on kind.
  int param() const { return param_; }
  // Dimensionality of the points this map evaluates.
  int dim() const { return kind_ == FeatureKind::Poly1D ? 1 : param_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<FeatureId>& ids() const { return ids_; }

  std::string name(std::size_t m) const;
  // Index of a second-order pair (i, j); order within the pair ignored.
  std::size_t pair_index(int i, int j) const;

  void eval(std::span<const double> x, std::span<double> out) const;
  std::vector<double> eval(std::span<const double> x) const;

 private:
  FeatureMap(FeatureKind kind, int param);

  FeatureKind kind_;
  int param_;
  std::vector<FeatureId> ids_;
};

}  // namespace entroherd
