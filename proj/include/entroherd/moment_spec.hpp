#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "entroherd/features.hpp"
#include "entroherd/kv.hpp"

namespace entroherd {

// Target moments plus per-feature weights in the coordinate system the
// engine actually optimizes in ("working coordinates").
//
// Standardized specs (built by the standardize_* constructors) record the
// raw feature mean/std of the source; working-coordinate features are then
// phi'_m = (phi_m - raw_mean_m)/raw_std_m, the target is 0 and the working
// weight is lambda for every feature. The raw-coordinate weight
// lambda/raw_std is exposed as effective_weight(), and
// a_m = effective_weight_m * (raw_moment_m - raw_mean_m) coincides with
// lambda * (standardized moment), which is the identity the weight-update
// step relies on.
//
// Direct specs (raw_mean = 0, raw_std = 1) carry explicit targets and
// weights, e.g. the two-feature Gaussian fixed-point setup.
struct MomentSpec {
  std::vector<double> raw_mean;
  std::vector<double> raw_std;
  std::vector<double> target;
  std::vector<double> weight;
  double lambda = 1.0;
  bool standardized = false;

  static MomentSpec direct(std::vector<double> target, std::vector<double> weight);

  std::size_t size() const { return target.size(); }
  std::vector<double> effective_weight() const;

  double to_working(std::size_t m, double raw) const {
    return (raw - raw_mean[m]) / raw_std[m];
  }
  void to_working(std::span<const double> raw, std::span<double> out) const;
  double to_raw(std::size_t m, double working) const {
    return working * raw_std[m] + raw_mean[m];
  }

  void validate() const;

  KeyValueConfig to_kv() const;
  static MomentSpec from_kv(const KeyValueConfig& kv);
};

// Feature mean/std over data rows; population std; throws EmptyData /
// ZeroVarianceFeature.
MomentSpec standardize_from_data(const FeatureMap& features,
                                 const std::vector<Point>& data, double lambda);

// Same, with expectations over an enumerated distribution (states[k] has
// probability prob[k]).
MomentSpec standardize_from_enumeration(const FeatureMap& features,
                                        const std::vector<Point>& states,
                                        const std::vector<double>& prob, double lambda);

}  // namespace entroherd
