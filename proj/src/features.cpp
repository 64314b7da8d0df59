#include "entroherd/features.hpp"

#include <stdexcept>

#include "entroherd/errors.hpp"

namespace entroherd {

FeatureMap::FeatureMap(FeatureKind kind, int param) : kind_(kind), param_(param) {}

FeatureMap FeatureMap::poly1d(int max_degree) {
  if (max_degree < 1) throw ConfigError("poly1d: max_degree must be >= 1");
  FeatureMap f(FeatureKind::Poly1D, max_degree);
  for (int k = 1; k <= max_degree; ++k) f.ids_.push_back({k, 0, -1});
  return f;
}

FeatureMap FeatureMap::spin_pairwise(int n_spins) {
  if (n_spins < 2) throw ConfigError("spin_pairwise: need at least 2 spins");
  FeatureMap f(FeatureKind::SpinPairwise, n_spins);
  for (int i = 0; i < n_spins; ++i) {
    for (int j = i + 1; j < n_spins; ++j) f.ids_.push_back({2, i, j});
  }
  return f;
}

FeatureMap FeatureMap::centered_moments(int n_vars) {
  if (n_vars < 1) throw ConfigError("centered_moments: need at least 1 variable");
  FeatureMap f(FeatureKind::CenteredMoments, n_vars);
  for (int i = 0; i < n_vars; ++i) f.ids_.push_back({1, i, -1});
  for (int i = 0; i < n_vars; ++i) {
    for (int j = i; j < n_vars; ++j) f.ids_.push_back({2, i, j});
  }
  for (int i = 0; i < n_vars; ++i) f.ids_.push_back({3, i, -1});
  for (int i = 0; i < n_vars; ++i) f.ids_.push_back({4, i, -1});
  return f;
}

std::string FeatureMap::name(std::size_t m) const {
  const FeatureId& id = ids_.at(m);
  switch (kind_) {
    case FeatureKind::Poly1D:
      return "x^" + std::to_string(id.order);
    case FeatureKind::SpinPairwise:
      return "s" + std::to_string(id.i) + "*s" + std::to_string(id.j);
    case FeatureKind::CenteredMoments:
      if (id.order == 2) {
        return "m2[" + std::to_string(id.i) + "," + std::to_string(id.j) + "]";
      }
      return "m" + std::to_string(id.order) + "[" + std::to_string(id.i) + "]";
  }
  return "?";
}

std::size_t FeatureMap::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  for (std::size_t m = 0; m < ids_.size(); ++m) {
    if (ids_[m].order == 2 && ids_[m].i == i && ids_[m].j == j) return m;
  }
  throw std::out_of_range("pair_index: no such pair feature");
}

void FeatureMap::eval(std::span<const double> x, std::span<double> out) const {
  if (static_cast<int>(x.size()) != dim()) {
    throw std::invalid_argument("feature eval: point has wrong dimension");
  }
  if (out.size() != ids_.size()) {
    throw std::invalid_argument("feature eval: output span has wrong size");
  }
  switch (kind_) {
    case FeatureKind::Poly1D: {
      double p = 1.0;
      for (std::size_t m = 0; m < ids_.size(); ++m) {
        p *= x[0];
        out[m] = p;
      }
      break;
    }
    case FeatureKind::SpinPairwise: {
      for (std::size_t m = 0; m < ids_.size(); ++m) {
        out[m] = x[ids_[m].i] * x[ids_[m].j];
      }
      break;
    }
    case FeatureKind::CenteredMoments: {
      for (std::size_t m = 0; m < ids_.size(); ++m) {
        const FeatureId& id = ids_[m];
        switch (id.order) {
          case 1: out[m] = x[id.i]; break;
          case 2: out[m] = x[id.i] * x[id.j]; break;
          case 3: out[m] = x[id.i] * x[id.i] * x[id.i]; break;
          default: out[m] = (x[id.i] * x[id.i]) * (x[id.i] * x[id.i]); break;
        }
      }
      break;
    }
  }
}

std::vector<double> FeatureMap::eval(std::span<const double> x) const {
  std::vector<double> out(ids_.size());
  eval(x, out);
  return out;
}

}  // namespace entroherd
