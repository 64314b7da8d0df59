#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entroherd/eval.hpp"
#include "entroherd/features.hpp"

namespace entroherd {

// Double-well 1-D target: log p(x) = -(x^4 - 3x^2 + 0.5x) + const.
struct BimodalTarget {
  double log_unnorm(double x) const { return -(((x * x) * (x * x)) - 3.0 * x * x + 0.5 * x); }
  // Normalizer over [lo, hi] by quadrature.
  double log_z(double lo = -4.0, double hi = 4.0) const;
  double log_pdf(double x, double lo = -4.0, double hi = 4.0) const;
};

// Random-walk Metropolis chain for the bimodal target: Gaussian proposals
// (std 0.5), start 0, burn-in discarded, no thinning.
std::vector<double> mh_sample_bimodal(std::size_t n, std::uint64_t seed,
                                      double proposal_std = 0.5, std::size_t burnin = 1000);

// Pairwise spin glass on N sites: couplings W_ij ~ N(0, 0.2^2/N) for i<j,
// then a deterministic overlay: chain couplings W_{i,i+1} = -0.3 for
// i = 0..N-2 except the severed (3,4) link, which is set to 0 (0-indexed).
// No bias terms. Returned as an enumerated Gibbs model over {-1,+1}^N.
GibbsModel make_boltzmann_instance(int n_spins, std::uint64_t seed);

struct VariableLog {
  std::string name;
  bool log10_applied = false;
  int zero_substitutions = 0;  // zeros replaced by -5.0 before z-scoring
  double z_mean = 0.0;
  double z_std = 1.0;
};

struct Dataset {
  std::vector<std::string> variables;
  std::vector<Point> rows;
  std::vector<VariableLog> preprocessing;
  std::size_t n() const { return rows.size(); }
};

// Semicolon-separated wine-quality CSV: 11 physicochemical variables plus a
// quality column that is dropped. log10 is applied to citric acid, residual
// sugar, chlorides and the two sulfur dioxide columns (zero citric acid
// becomes -5.0). Raw values are sanity-checked against the documented
// variable ranges before transforming.
Dataset load_wine_csv(const std::string& path);

struct SplitResult {
  Dataset train;
  Dataset validation;
};

// Seeded uniform split (validation size = floor(n*fraction)); z-score
// statistics are computed on the train rows only and applied to both parts.
SplitResult split_train_validation(const Dataset& data, double fraction, std::uint64_t seed);

// Rank-based AUC with ties counted 1/2 (Mann-Whitney).
double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores);

// Fraction of truths inside their [lo_quantile, hi_quantile] interval.
double quantile_coverage(const std::vector<std::pair<double, double>>& intervals,
                         const std::vector<double>& truths);

// Dense multivariate normal fitted by moments; baseline for the wine study.
class MvnModel {
 public:
  explicit MvnModel(const std::vector<Point>& rows);
  double log_density(const Point& x) const;
  // Conditional distribution of coordinate i given the others: (mean, std).
  std::pair<double, double> conditional_univariate(int i, const Point& x) const;
  int dim() const { return static_cast<int>(mean_.size()); }

 private:
  std::vector<double> mean_;
  std::vector<std::vector<double>> cov_;
  std::vector<std::vector<double>> chol_;  // lower triangular
  double log_det_ = 0.0;
};

double normal_quantile(double p);  // inverse standard-normal CDF

}  // namespace entroherd
