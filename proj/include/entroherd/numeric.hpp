#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace entroherd {

// Neumaier-compensated accumulator for long sums over enumerated state
// spaces (up to 2^20 terms) where plain accumulation loses digits.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Max-shifted log(sum(exp(v))); -inf inputs are fine, empty input is -inf.
double log_sum_exp(std::span<const double> v);

inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

inline double normal_log_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.91893853320467274178;  // log sqrt(2 pi)
}

double mean_of(std::span<const double> v);
// Population standard deviation (divide by n, not n-1).
double population_std(std::span<const double> v);

// Adaptive Simpson quadrature to absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-10);

// Rank-based correlation with average ranks on ties.
double spearman(std::span<const double> x, std::span<const double> y);

// Ranks with ties averaged, 1-based (helper shared with the AUC code).
std::vector<double> average_ranks(std::span<const double> v);

}  // namespace entroherd
