#include "entroherd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "entroherd/errors.hpp"
#include "entroherd/kv.hpp"
#include "entroherd/numeric.hpp"
#include "entroherd/rng.hpp"

namespace entroherd {

double BimodalTarget::log_z(double lo, double hi) const {
  return std::log(integrate([this](double x) { return std::exp(log_unnorm(x)); }, lo, hi,
                            1e-12));
}

double BimodalTarget::log_pdf(double x, double lo, double hi) const {
  return log_unnorm(x) - log_z(lo, hi);
}

std::vector<double> mh_sample_bimodal(std::size_t n, std::uint64_t seed, double proposal_std,
                                      std::size_t burnin) {
  BimodalTarget target;
  RngStream rng(seed, "mh");
  std::vector<double> out;
  out.reserve(n);
  double x = 0.0;
  double lp = target.log_unnorm(x);
  for (std::size_t i = 0; i < burnin + n; ++i) {
    const double cand = x + proposal_std * rng.normal();
    const double lp_cand = target.log_unnorm(cand);
    if (lp_cand >= lp || rng.uniform() < std::exp(lp_cand - lp)) {
      x = cand;
      lp = lp_cand;
    }
    if (i >= burnin) out.push_back(x);
  }
  return out;
}

GibbsModel make_boltzmann_instance(int n_spins, std::uint64_t seed) {
  const FeatureMap features = FeatureMap::spin_pairwise(n_spins);
  RngStream rng(seed, "boltzmann");
  const double sd = 0.2 / std::sqrt(static_cast<double>(n_spins));
  std::vector<double> theta(features.size());
  for (double& w : theta) w = sd * rng.normal();
  // Deterministic overlay: a -0.3 chain with the (3,4) link severed.
  for (int i = 0; i + 1 < n_spins; ++i) {
    theta[features.pair_index(i, i + 1)] = i == 3 ? 0.0 : -0.3;
  }
  return enumerate_gibbs(features, theta, Domain::spin(n_spins));
}

namespace {

struct WineColumn {
  const char* name;
  double lo;
  double hi;
  bool log10;
};

// Documented ranges; log10 columns are the right-skewed concentrations.
constexpr WineColumn kWineColumns[] = {
    {"fixed acidity", 3.80, 15.90, false},
    {"volatile acidity", 0.08, 1.58, false},
    {"citric acid", 0.00, 1.66, true},
    {"residual sugar", 0.60, 65.80, true},
    {"chlorides", 0.01, 0.61, true},
    {"free sulfur dioxide", 1.00, 289.00, true},
    {"total sulfur dioxide", 6.00, 440.00, true},
    {"density", 0.99, 1.04, false},
    {"pH", 2.72, 4.01, false},
    {"sulphates", 0.22, 2.00, false},
    {"alcohol", 8.00, 14.90, false},
};
constexpr int kWineVars = 11;

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_semicolons(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ';')) out.push_back(cell);
  return out;
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
  const std::string s = strip(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw NonNumericCell("row " + std::to_string(row) + ", column '" + col + "': '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset load_wine_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyData();

  const std::vector<std::string> header = split_semicolons(line);
  std::vector<int> col_of(kWineVars, -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = strip(header[c]);
    for (int v = 0; v < kWineVars; ++v) {
      if (name == kWineColumns[v].name) col_of[v] = static_cast<int>(c);
    }
  }
  for (int v = 0; v < kWineVars; ++v) {
    if (col_of[v] < 0) throw MissingColumn(std::string(kWineColumns[v].name) + " in " + path);
  }

  Dataset data;
  for (int v = 0; v < kWineVars; ++v) data.variables.push_back(kWineColumns[v].name);
  data.preprocessing.resize(kWineVars);
  for (int v = 0; v < kWineVars; ++v) {
    data.preprocessing[v].name = kWineColumns[v].name;
    data.preprocessing[v].log10_applied = kWineColumns[v].log10;
  }

  std::vector<double> raw_min(kWineVars, std::numeric_limits<double>::infinity());
  std::vector<double> raw_max(kWineVars, -std::numeric_limits<double>::infinity());
  std::size_t rowno = 0;
  while (std::getline(in, line)) {
    ++rowno;
    if (strip(line).empty()) continue;
    const std::vector<std::string> cells = split_semicolons(line);
    Point row(kWineVars);
    for (int v = 0; v < kWineVars; ++v) {
      const int c = col_of[v];
      if (c >= static_cast<int>(cells.size())) {
        throw MissingColumn("row " + std::to_string(rowno) + " is short in " + path);
      }
      const double raw =
          parse_cell(cells[static_cast<std::size_t>(c)], rowno, kWineColumns[v].name);
      raw_min[v] = std::min(raw_min[v], raw);
      raw_max[v] = std::max(raw_max[v], raw);
      double x = raw;
      if (kWineColumns[v].log10) {
        if (raw == 0.0 && v == 2) {
          x = -5.0;  // zero citric acid sentinel, z-scored like any other value
          ++data.preprocessing[v].zero_substitutions;
        } else if (raw <= 0.0) {
          throw RangeSanityFail("non-positive value in log column '" +
                                std::string(kWineColumns[v].name) + "' at row " +
                                std::to_string(rowno));
        } else {
          x = std::log10(raw);
        }
      }
      row[v] = x;
    }
    data.rows.push_back(std::move(row));
  }
  if (data.rows.empty()) throw EmptyData();

  for (int v = 0; v < kWineVars; ++v) {
    // Tolerance: 10% of the documented range width.
    const double tol = 0.10 * (kWineColumns[v].hi - kWineColumns[v].lo);
    if (raw_min[v] < kWineColumns[v].lo - tol || raw_max[v] > kWineColumns[v].hi + tol) {
      throw RangeSanityFail("variable '" + std::string(kWineColumns[v].name) +
                            "' spans [" + format_double(raw_min[v]) + ", " +
                            format_double(raw_max[v]) + "], expected about [" +
                            format_double(kWineColumns[v].lo) + ", " +
                            format_double(kWineColumns[v].hi) + "]");
    }
  }
  return data;
}

SplitResult split_train_validation(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
  if (data.rows.empty()) throw EmptyData();
  const std::size_t n = data.rows.size();
  const std::size_t n_val = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val == n) throw ConfigError("split leaves an empty part");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(seed, "split");
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_int(i + 1);
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_val),
                                     perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  SplitResult out;
  out.train.variables = out.validation.variables = data.variables;
  out.train.preprocessing = out.validation.preprocessing = data.preprocessing;
  for (std::size_t i : train_idx) out.train.rows.push_back(data.rows[i]);
  for (std::size_t i : val_idx) out.validation.rows.push_back(data.rows[i]);

  const int d = static_cast<int>(data.variables.size());
  for (int v = 0; v < d; ++v) {
    std::vector<double> col(out.train.rows.size());
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = out.train.rows[i][v];
    const double m = mean_of(col);
    const double s = population_std(col);
    if (!(s > 0.0)) throw ZeroVarianceFeature(data.variables[v]);
    for (Dataset* part : {&out.train, &out.validation}) {
      for (Point& row : part->rows) row[v] = (row[v] - m) / s;
      part->preprocessing[v].z_mean = m;
      part->preprocessing[v].z_std = s;
    }
  }
  return out;
}

double auc(const std::vector<double>& positive_scores,
           const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("auc: both classes need at least one score");
  }
  std::vector<double> all(positive_scores);
  all.insert(all.end(), negative_scores.begin(), negative_scores.end());
  const std::vector<double> rank = average_ranks(all);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < positive_scores.size(); ++i) rank_sum += rank[i];
  const double np = static_cast<double>(positive_scores.size());
  const double nn = static_cast<double>(negative_scores.size());
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double quantile_coverage(const std::vector<std::pair<double, double>>& intervals,
                         const std::vector<double>& truths) {
  if (intervals.size() != truths.size() || intervals.empty()) {
    throw std::invalid_argument("quantile_coverage: size mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] >= intervals[i].first && truths[i] <= intervals[i].second) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

namespace {

// Gaussian elimination with partial pivoting; A is consumed.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0) throw NumericalError("singular matrix in conditional solve");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

MvnModel::MvnModel(const std::vector<Point>& rows) {
  if (rows.empty()) throw EmptyData();
  const std::size_t d = rows[0].size();
  const double n = static_cast<double>(rows.size());
  mean_.assign(d, 0.0);
  for (const Point& r : rows) {
    for (std::size_t i = 0; i < d; ++i) mean_[i] += r[i];
  }
  for (double& m : mean_) m /= n;
  cov_.assign(d, std::vector<double>(d, 0.0));
  for (const Point& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        cov_[i][j] += (r[i] - mean_[i]) * (r[j] - mean_[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov_[i][j] /= n;
      cov_[j][i] = cov_[i][j];
    }
  }
  // Cholesky, lower triangular.
  chol_.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = cov_[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= chol_[i][k] * chol_[j][k];
      if (i == j) {
        if (!(s > 0.0)) throw NumericalError("covariance not positive definite");
        chol_[i][i] = std::sqrt(s);
        log_det_ += 2.0 * std::log(chol_[i][i]);
      } else {
        chol_[i][j] = s / chol_[j][j];
      }
    }
  }
}

double MvnModel::log_density(const Point& x) const {
  const std::size_t d = mean_.size();
  if (x.size() != d) throw std::invalid_argument("mvn log_density: wrong dimension");
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = x[i] - mean_[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol_[i][k] * y[k];
    y[i] = s / chol_[i][i];
  }
  double quad = 0.0;
  for (double v : y) quad += v * v;
  return -0.5 * quad - 0.5 * log_det_ -
         0.5 * static_cast<double>(d) * 1.8378770664093454836;  // log(2 pi)
}

std::pair<double, double> MvnModel::conditional_univariate(int i, const Point& x) const {
  const int d = dim();
  if (i < 0 || i >= d) throw std::invalid_argument("mvn conditional: bad index");
  if (static_cast<int>(x.size()) != d) {
    throw std::invalid_argument("mvn conditional: observed must have full dimension");
  }
  std::vector<std::vector<double>> a;
  std::vector<double> diff, cross;
  for (int r = 0; r < d; ++r) {
    if (r == i) continue;
    std::vector<double> row;
    for (int c = 0; c < d; ++c) {
      if (c == i) continue;
      row.push_back(cov_[r][c]);
    }
    a.push_back(std::move(row));
    diff.push_back(x[r] - mean_[r]);
    cross.push_back(cov_[i][r]);
  }
  const std::vector<double> w = solve_linear(a, cross);  // Sigma_rest^{-1} Sigma_rest,i
  double mu = mean_[i];
  double var = cov_[i][i];
  for (std::size_t k = 0; k < w.size(); ++k) {
    mu += w[k] * diff[k];
    var -= w[k] * cross[k];
  }
  if (!(var > 0.0)) throw NumericalError("mvn conditional: non-positive variance");
  return {mu, std::sqrt(var)};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace entroherd
