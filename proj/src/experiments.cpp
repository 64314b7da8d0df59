#include "entroherd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "entroherd/data.hpp"
#include "entroherd/engine.hpp"
#include "entroherd/errors.hpp"
#include "entroherd/eval.hpp"
#include "entroherd/numeric.hpp"

namespace entroherd {

namespace {

using ordered_json = nlohmann::ordered_json;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Variant-scoped overrides: keys like "entropic.k_update" override k_update
// for that variant only.
HerdingConfig with_overrides(HerdingConfig base, const KeyValueConfig& config,
                             const std::string& prefix) {
  KeyValueConfig sub;
  const std::string want = prefix + ".";
  for (const auto& [key, value] : config.entries()) {
    if (key.rfind(want, 0) == 0) sub.set(key.substr(want.size()), value);
  }
  return base.overridden_by(sub);
}

std::string csv_double(double v) { return format_double(v); }

// Per-step component mass over fixed-width bins; one row per (step, bin).
std::string component_colormap_csv(const HerdingRun& run, double lo, double hi,
                                   double bin_width) {
  const int n_bins = static_cast<int>(std::lround((hi - lo) / bin_width));
  std::ostringstream csv;
  csv << "t,bin_lo,bin_hi,mass\n";
  for (const TrajectoryStep& step : run.trajectory) {
    const ComponentParams& r = step.r;
    for (int b = 0; b < n_bins; ++b) {
      const double e0 = lo + b * bin_width;
      const double e1 = b + 1 == n_bins ? hi : lo + (b + 1) * bin_width;
      double mass = 0.0;
      if (r.family == Family::PointMass) {
        const double x = r.x.at(0);
        if (x >= e0 && (x < e1 || (b + 1 == n_bins && x <= e1))) mass = 1.0;
      } else {
        const double mu = r.mu.at(0);
        const double sigma = r.sigma(0);
        mass = normal_cdf((e1 - mu) / sigma) - normal_cdf((e0 - mu) / sigma);
      }
      csv << step.t << "," << csv_double(e0) << "," << csv_double(e1) << ","
          << csv_double(mass) << "\n";
    }
  }
  return csv.str();
}

std::string histogram_csv(const HistogramCompare& h) {
  std::ostringstream csv;
  csv << "bin_lo,bin_hi,target_mass,model_mass\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    csv << csv_double(h.edges[b]) << "," << csv_double(h.edges[b + 1]) << ","
        << csv_double(h.mass_target[b]) << "," << csv_double(h.mass_model[b]) << "\n";
  }
  return csv.str();
}

std::vector<double> sample_discrete(const std::vector<double>& prob, std::size_t n,
                                    RngStream& rng) {
  std::vector<double> cum(prob.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    cum[i] = acc;
  }
  std::vector<double> counts(prob.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    counts[std::min(idx, prob.size() - 1)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(n);
  return counts;
}

double table_entropy(const std::vector<double>& prob) {
  CompensatedSum h;
  for (double p : prob) {
    if (p > 0.0) h.add(-p * std::log(p));
  }
  return h.value();
}

// The symmetric start p = 1/2 is an exact stationary point of the inner
// objective (all pairwise moments and both gradients vanish there), so spin
// runs start from small seeded random logits instead.
ComponentParams random_spin_init(int n, std::uint64_t seed) {
  RngStream rng(seed, "init");
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& v : s) v = rng.uniform(-0.5, 0.5);
  return ComponentParams::spin_logits(s);
}

}  // namespace

ExperimentReport ExperimentReport::make(const std::string& experiment, std::uint64_t seed) {
  ExperimentReport r;
  r.experiment = experiment;
  r.seed = seed;
  for (const char* key : {"sse", "entropy", "kl", "tv", "auc", "coverage"}) {
    r.metrics.emplace_back(key, std::nullopt);
  }
  return r;
}

void ExperimentReport::echo(const std::string& key, const std::string& value) {
  config_echo.emplace_back(key, value);
}

void ExperimentReport::echo_config(const KeyValueConfig& kv, const std::string& prefix) {
  for (const auto& [key, value] : kv.entries()) echo(prefix + key, value);
}

void ExperimentReport::set_metric(const std::string& name, double value) {
  for (auto& [key, stored] : metrics) {
    if (key == name) {
      stored = std::isfinite(value) ? std::optional<double>(value) : std::nullopt;
      return;
    }
  }
  metrics.emplace_back(name, std::isfinite(value) ? std::optional<double>(value)
                                                  : std::nullopt);
}

void ExperimentReport::set_metric_null(const std::string& name) {
  for (auto& [key, stored] : metrics) {
    if (key == name) {
      stored = std::nullopt;
      return;
    }
  }
  metrics.emplace_back(name, std::nullopt);
}

std::optional<double> ExperimentReport::metric(const std::string& name) const {
  for (const auto& [key, stored] : metrics) {
    if (key == name) return stored;
  }
  return std::nullopt;
}

void ExperimentReport::add_artifact(const std::string& label, const std::string& path) {
  artifacts.emplace_back(label, path);
}

std::string ExperimentReport::to_json_string(int indent) const {
  ordered_json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["wall_clock_sec"] = wall_clock_sec;
  ordered_json cfg = ordered_json::object();
  for (const auto& [key, value] : config_echo) cfg[key] = value;
  j["config"] = cfg;
  ordered_json mt = ordered_json::object();
  for (const auto& [key, value] : metrics) {
    if (value.has_value()) {
      mt[key] = *value;
    } else {
      mt[key] = nullptr;
    }
  }
  j["metrics"] = mt;
  ordered_json art = ordered_json::object();
  for (const auto& [key, value] : artifacts) art[key] = value;
  j["artifacts"] = art;
  return j.dump(indent) + "\n";
}

void ExperimentReport::save(const std::string& path) const {
  write_text_file(path, to_json_string());
}

void validate_report_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  if (!j.is_object()) throw std::runtime_error("report: root must be an object");
  const std::vector<std::string> required = {"experiment", "seed",    "wall_clock_sec",
                                             "config",     "metrics", "artifacts"};
  for (const std::string& key : required) {
    if (!j.contains(key)) throw std::runtime_error("report: missing key '" + key + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(required.begin(), required.end(), key) == required.end()) {
      throw std::runtime_error("report: unexpected key '" + key + "'");
    }
  }
  if (!j["experiment"].is_string()) throw std::runtime_error("report: experiment not a string");
  const std::string exp = j["experiment"].get<std::string>();
  if (exp != "bimodal" && exp != "boltzmann" && exp != "wine" && exp != "fetch") {
    throw std::runtime_error("report: unknown experiment '" + exp + "'");
  }
  if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
    throw std::runtime_error("report: seed not an integer");
  }
  if (!j["wall_clock_sec"].is_number()) {
    throw std::runtime_error("report: wall_clock_sec not a number");
  }
  if (!j["config"].is_object()) throw std::runtime_error("report: config not an object");
  for (const auto& [key, value] : j["config"].items()) {
    if (!value.is_string()) {
      throw std::runtime_error("report: config value for '" + key + "' not a string");
    }
  }
  if (!j["metrics"].is_object()) throw std::runtime_error("report: metrics not an object");
  for (const char* key : {"sse", "entropy", "kl", "tv", "auc", "coverage"}) {
    if (!j["metrics"].contains(key)) {
      throw std::runtime_error(std::string("report: canonical metric '") + key + "' absent");
    }
  }
  for (const auto& [key, value] : j["metrics"].items()) {
    if (!value.is_number() && !value.is_null()) {
      throw std::runtime_error("report: metric '" + key + "' not number or null");
    }
  }
  if (!j["artifacts"].is_object()) throw std::runtime_error("report: artifacts not an object");
  for (const auto& [key, value] : j["artifacts"].items()) {
    if (!value.is_string()) {
      throw std::runtime_error("report: artifact '" + key + "' not a string path");
    }
  }
}

std::string resolve_data_path(const KeyValueConfig& config, const std::string& key,
                              const std::string& filename) {
  if (config.has(key)) return config.get_string(key);
  if (const char* env = std::getenv("ENTROHERD_DATA_DIR")) {
    return std::string(env) + "/" + filename;
  }
  return "data/" + filename;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("short write to " + path);
}

ExperimentReport cmd_bimodal(const RunOptions& opt) {
  Timer timer;
  const KeyValueConfig& c = opt.config;
  const std::uint64_t seed = opt.seed;
  const std::string dir = opt.out_dir + "/bimodal";

  const std::size_t n_input = static_cast<std::size_t>(c.get_int("n_input_samples", 10000));
  const double lambda = c.get_double("lambda", 100.0);
  const double lo = c.get_double("grid_lo", -4.0);
  const double hi = c.get_double("grid_hi", 4.0);
  const double grid_step = c.get_double("grid_step", 1e-3);
  const double bin_width = c.get_double("bin_width", 0.1);

  const std::vector<double> samples = mh_sample_bimodal(n_input, seed);
  std::vector<Point> rows;
  rows.reserve(samples.size());
  for (double x : samples) rows.push_back({x});
  const FeatureMap features = FeatureMap::poly1d(4);
  const MomentSpec spec = standardize_from_data(features, rows, lambda);

  const int n_grid = static_cast<int>(std::lround((hi - lo) / grid_step));
  std::vector<Point> domain;
  domain.reserve(static_cast<std::size_t>(n_grid) + 1);
  for (int i = 0; i <= n_grid; ++i) domain.push_back({lo + i * grid_step});

  HerdingConfig ent;
  ent.eps_herding = 0.02;
  ent.t_output = 100;
  ent.t_burnin = 50;
  ent.eta_learn = 0.2;
  ent.k_update = 50;
  ent.use_modified_weights = true;
  ent.p_jump = 0.0;
  ent.lambda = lambda;
  ent.seed = seed;
  ent = with_overrides(ent, c, "entropic");

  HerdingConfig ent_jump = ent;
  ent_jump.p_jump = 0.1;
  ent_jump = with_overrides(ent_jump, c, "entropic_jump");

  HerdingConfig pt;
  pt.eps_herding = 0.002;
  pt.t_output = 1000;
  pt.t_burnin = 500;
  pt.eta_learn = 0.2;
  pt.k_update = 50;
  pt.use_modified_weights = false;
  pt.p_jump = 0.0;
  pt.lambda = lambda;
  pt.seed = seed;
  pt = with_overrides(pt, c, "point");
  HerdingConfig metro = with_overrides(pt, c, "metropolis");

  const ComponentParams init = ComponentParams::gauss1d(0.0, 1.0);
  const HerdingRun run_ent = run_entropic(features, spec, ent, init);
  const HerdingRun run_entj = run_entropic(features, spec, ent_jump, init);
  const HerdingRun run_pt = run_point(features, spec, pt, domain);
  const HerdingRun run_mt = run_point_metropolis(features, spec, metro, domain);

  ExperimentReport report = ExperimentReport::make("bimodal", seed);
  const BimodalTarget target;
  const auto target_log = [&target](double x) { return target.log_unnorm(x); };

  struct Variant {
    const char* name;
    const HerdingRun* run;
  };
  const Variant variants[] = {{"entropic", &run_ent},
                              {"entropic_jump", &run_entj},
                              {"point", &run_pt},
                              {"metropolis", &run_mt}};
  for (const Variant& v : variants) {
    const MixtureModel model = v.run->output_mixture();
    const std::string mix_path = dir + "/mixture_" + v.name + ".json";
    write_text_file(mix_path, model.to_json_string());
    report.add_artifact(std::string("mixture_") + v.name, mix_path);

    const std::string map_path = dir + "/colormap_" + v.name + ".csv";
    write_text_file(map_path, component_colormap_csv(*v.run, lo, hi, bin_width));
    report.add_artifact(std::string("colormap_") + v.name, map_path);

    const HistogramCompare hist = histogram_compare(model, target_log, lo, hi, bin_width);
    const std::string hist_path = dir + "/histogram_" + v.name + ".csv";
    write_text_file(hist_path, histogram_csv(hist));
    report.add_artifact(std::string("histogram_") + v.name, hist_path);
    report.set_metric(std::string("tv_") + v.name, hist.tv);
    report.set_metric(std::string("sse_") + v.name, moment_sse(model, features, spec));

    const std::string traj_path = dir + "/trajectory_" + v.name + ".csv";
    write_text_file(traj_path, v.run->trajectory_csv());
    report.add_artifact(std::string("trajectory_") + v.name, traj_path);
  }

  const MixtureModel ent_model = run_ent.output_mixture();
  report.set_metric("sse", moment_sse(ent_model, features, spec));
  report.set_metric("entropy", ent_model.entropy_mc(1u << 17, seed).first);
  report.set_metric("tv", *report.metric("tv_entropic"));
  report.set_metric("ltilde_final", run_ent.trajectory.back().ltilde);

  report.echo("lambda", format_double(lambda));
  report.echo("n_input_samples", std::to_string(n_input));
  report.echo("grid_lo", format_double(lo));
  report.echo("grid_hi", format_double(hi));
  report.echo("grid_step", format_double(grid_step));
  report.echo("bin_width", format_double(bin_width));
  report.echo("colormap_normalization", "none");
  report.echo_config(ent.to_kv(), "entropic.");
  report.echo_config(ent_jump.to_kv(), "entropic_jump.");
  report.echo_config(pt.to_kv(), "point.");
  report.echo_config(metro.to_kv(), "metropolis.");

  report.wall_clock_sec = timer.seconds();
  report.save(dir + "/report.json");
  return report;
}

namespace {

struct SweepResult {
  double lambda = 0.0;
  int t_output = 0;
  int trial = 0;
  std::uint64_t run_seed = 0;
  double sse = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
};

SweepResult sweep_one(const GibbsModel& target, double lambda, int t_output, int trial,
                      std::uint64_t run_seed, const HerdingConfig& base) {
  const MomentSpec spec = standardize_from_model(target.features, target, lambda);
  HerdingConfig cfg = base;
  cfg.lambda = lambda;
  cfg.t_output = t_output;
  cfg.seed = run_seed;
  const ComponentParams init = random_spin_init(target.features.dim(), run_seed);
  const HerdingRun run = run_entropic(target.features, spec, cfg, init);
  const MixtureModel model = run.output_mixture();
  const std::vector<double> table = mixture_prob_table(model, target.domain);
  SweepResult out;
  out.lambda = lambda;
  out.t_output = t_output;
  out.trial = trial;
  out.run_seed = run_seed;
  out.sse = moment_sse(model, target.features, spec);
  out.entropy = table_entropy(table);
  const KlResult kl = kl_discrete(target.prob, table);
  out.kl = kl.finite ? kl.nats : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

ExperimentReport cmd_boltzmann(const RunOptions& opt) {
  Timer timer;
  const KeyValueConfig& c = opt.config;
  const std::uint64_t seed = opt.seed;
  const std::string dir = opt.out_dir + "/boltzmann";

  const int n_spins = static_cast<int>(c.get_int("n_spins", 10));
  const double lambda = c.get_double("lambda", 13.0);
  const std::size_t n_empirical = static_cast<std::size_t>(c.get_int("n_empirical", 320));

  const GibbsModel target = make_boltzmann_instance(n_spins, seed);
  const MomentSpec spec = standardize_from_model(target.features, target, lambda);

  HerdingConfig cfg;
  cfg.eps_herding = 0.05;
  cfg.t_output = 320;
  cfg.t_burnin = 100;
  cfg.eta_learn = 0.2;
  cfg.k_update = 50;
  cfg.use_modified_weights = false;
  cfg.p_jump = 0.1;
  cfg.lambda = lambda;
  cfg.seed = seed;
  cfg = with_overrides(cfg, c, "entropic");

  const ComponentParams init = random_spin_init(n_spins, seed);
  const HerdingRun run = run_entropic(target.features, spec, cfg, init);
  const MixtureModel model = run.output_mixture();
  const std::vector<double> p_model = mixture_prob_table(model, target.domain);

  RngStream emp_rng(seed, "empirical");
  const std::vector<double> p_emp = sample_discrete(target.prob, n_empirical, emp_rng);

  ExperimentReport report = ExperimentReport::make("boltzmann", seed);

  const std::string scatter_path = dir + "/scatter.csv";
  write_text_file(scatter_path, gibbs_scatter_csv(target, p_model, p_emp));
  report.add_artifact("scatter", scatter_path);

  const std::string mix_path = dir + "/mixture.json";
  write_text_file(mix_path, model.to_json_string());
  report.add_artifact("mixture", mix_path);

  const std::string traj_path = dir + "/trajectory.csv";
  write_text_file(traj_path, run.trajectory_csv());
  report.add_artifact("trajectory", traj_path);

  const KlResult kl_model = kl_discrete(target.prob, p_model);
  const KlResult kl_emp = kl_discrete(target.prob, p_emp);
  report.set_metric("sse", moment_sse(model, target.features, spec));
  report.set_metric("entropy", table_entropy(p_model));
  report.set_metric("target_entropy", target.entropy);
  if (kl_model.finite) {
    report.set_metric("kl", kl_model.nats);
  } else {
    report.set_metric_null("kl");
  }
  if (kl_emp.finite) {
    report.set_metric("kl_empirical", kl_emp.nats);
  } else {
    report.set_metric_null("kl_empirical");
  }
  report.set_metric("kl_empirical_zero_states", static_cast<double>(kl_emp.zero_q_states));
  report.set_metric("ltilde_final", run.trajectory.back().ltilde);

  report.echo("n_spins", std::to_string(n_spins));
  report.echo("lambda", format_double(lambda));
  report.echo("n_empirical", std::to_string(n_empirical));
  report.echo_config(cfg.to_kv(), "entropic.");

  if (opt.sweep) {
    const std::vector<double> lambdas =
        c.get_double_list("sweep_lambdas", {1.0, 3.0, 13.0, 50.0, 100.0, 200.0});
    const std::vector<double> touts_d =
        c.get_double_list("sweep_t_outputs", {20.0, 40.0, 80.0, 160.0, 320.0});
    const int n_trials = static_cast<int>(c.get_int("sweep_trials", 10));
    report.echo("sweep_lambdas", join_doubles(lambdas));
    report.echo("sweep_t_outputs", join_doubles(touts_d));
    report.echo("sweep_trials", std::to_string(n_trials));

    struct Job {
      double lambda;
      int t_output;
      int trial;
      std::uint64_t run_seed;
    };
    std::vector<Job> jobs;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      for (std::size_t ti = 0; ti < touts_d.size(); ++ti) {
        for (int tr = 0; tr < n_trials; ++tr) {
          RngStream derive(seed, "sweep", (li * touts_d.size() + ti) * 1000 +
                                              static_cast<std::uint64_t>(tr));
          jobs.push_back({lambdas[li], static_cast<int>(touts_d[ti]), tr, derive.next_u64()});
        }
      }
    }

    std::vector<SweepResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const unsigned n_workers = std::max(1u, std::min<unsigned>(
        std::thread::hardware_concurrency(), static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          const Job& job = jobs[i];
          results[i] = sweep_one(target, job.lambda, job.t_output, job.trial, job.run_seed, cfg);
        }
      });
    }
    for (std::thread& w : workers) w.join();

    std::ostringstream trials_csv;
    trials_csv << "lambda,t_output,trial,run_seed,sse,entropy,kl\n";
    for (const SweepResult& r : results) {
      trials_csv << csv_double(r.lambda) << "," << r.t_output << "," << r.trial << ","
                 << r.run_seed << "," << csv_double(r.sse) << "," << csv_double(r.entropy)
                 << "," << csv_double(r.kl) << "\n";
    }
    const std::string trials_path = dir + "/sweep_trials.csv";
    write_text_file(trials_path, trials_csv.str());
    report.add_artifact("sweep_trials", trials_path);

    std::ostringstream series_csv;
    series_csv << "lambda,t_output,sse_mean,entropy_mean,kl_mean\n";
    std::size_t idx = 0;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      for (std::size_t ti = 0; ti < touts_d.size(); ++ti) {
        double sse = 0.0, ent = 0.0, kl = 0.0;
        for (int tr = 0; tr < n_trials; ++tr, ++idx) {
          sse += results[idx].sse;
          ent += results[idx].entropy;
          kl += results[idx].kl;
        }
        const double inv = 1.0 / static_cast<double>(n_trials);
        series_csv << csv_double(lambdas[li]) << "," << static_cast<int>(touts_d[ti]) << ","
                   << csv_double(sse * inv) << "," << csv_double(ent * inv) << ","
                   << csv_double(kl * inv) << "\n";
      }
    }
    const std::string series_path = dir + "/sweep_series.csv";
    write_text_file(series_path, series_csv.str());
    report.add_artifact("sweep_series", series_path);
  }

  report.wall_clock_sec = timer.seconds();
  report.save(dir + "/report.json");
  return report;
}

namespace {

struct WineColorRun {
  std::string color;
  Dataset full;  // log10-transformed, unscaled
  SplitResult split;
  MomentSpec spec;
  MixtureModel model;
  MvnModel mvn;
  double log_jacobian = 0.0;  // -sum log z_std, z-space density -> log10 space
};

std::string pairplot_model_csv(const MixtureModel& model, double lo, double hi, double width) {
  const int d = model.dim();
  const int n_bins = static_cast<int>(std::lround((hi - lo) / width));
  // cdf_tab[k][v][e]: component k, variable v, edge e.
  const std::size_t n_comp = model.n_components();
  std::vector<std::vector<std::vector<double>>> cdf_tab(
      n_comp, std::vector<std::vector<double>>(static_cast<std::size_t>(d),
                                               std::vector<double>(n_bins + 1)));
  for (std::size_t k = 0; k < n_comp; ++k) {
    const ComponentParams& q = model.components()[k];
    for (int v = 0; v < d; ++v) {
      for (int e = 0; e <= n_bins; ++e) {
        const double x = lo + e * width;
        cdf_tab[k][v][e] = normal_cdf((x - q.mu[v]) / q.sigma(v));
      }
    }
  }
  std::ostringstream csv;
  csv << "var_i,var_j,lo_i,lo_j,mass\n";
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (int bi = 0; bi < n_bins; ++bi) {
        for (int bj = (i == j ? bi : 0); bj < (i == j ? bi + 1 : n_bins); ++bj) {
          double mass = 0.0;
          for (std::size_t k = 0; k < n_comp; ++k) {
            const double mi = cdf_tab[k][i][bi + 1] - cdf_tab[k][i][bi];
            const double mj = i == j ? 1.0 : cdf_tab[k][j][bj + 1] - cdf_tab[k][j][bj];
            mass += model.weights()[k] * mi * mj;
          }
          csv << i << "," << j << "," << csv_double(lo + bi * width) << ","
              << csv_double(lo + bj * width) << "," << csv_double(mass) << "\n";
        }
      }
    }
  }
  return csv.str();
}

std::string pairplot_data_csv(const std::vector<Point>& rows, int d, double lo, double hi,
                              double width) {
  const int n_bins = static_cast<int>(std::lround((hi - lo) / width));
  const auto bin_of = [&](double x) -> int {
    if (x < lo || x >= hi) return -1;
    return std::min(n_bins - 1, static_cast<int>((x - lo) / width));
  };
  std::ostringstream csv;
  csv << "var_i,var_j,lo_i,lo_j,mass\n";
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      std::vector<double> mass(static_cast<std::size_t>(n_bins) *
                                   (i == j ? 1 : static_cast<std::size_t>(n_bins)),
                               0.0);
      for (const Point& row : rows) {
        const int bi = bin_of(row[i]);
        if (bi < 0) continue;
        if (i == j) {
          mass[static_cast<std::size_t>(bi)] += inv;
        } else {
          const int bj = bin_of(row[j]);
          if (bj < 0) continue;
          mass[static_cast<std::size_t>(bi) * n_bins + bj] += inv;
        }
      }
      for (int bi = 0; bi < n_bins; ++bi) {
        for (int bj = (i == j ? bi : 0); bj < (i == j ? bi + 1 : n_bins); ++bj) {
          const double m =
              i == j ? mass[static_cast<std::size_t>(bi)]
                     : mass[static_cast<std::size_t>(bi) * n_bins + bj];
          csv << i << "," << j << "," << csv_double(lo + bi * width) << ","
              << csv_double(lo + bj * width) << "," << csv_double(m) << "\n";
        }
      }
    }
  }
  return csv.str();
}

}  // namespace

ExperimentReport cmd_wine(const RunOptions& opt) {
  Timer timer;
  const KeyValueConfig& c = opt.config;
  const std::uint64_t seed = opt.seed;
  const std::string dir = opt.out_dir + "/wine";

  const double lambda = c.get_double("lambda", 200.0);
  const double val_fraction = c.get_double("validation_fraction", 0.2);
  const int cond_index = static_cast<int>(c.get_int("conditional_index", 3));
  const double cell = c.get_double("pairplot_cell", 0.5);
  const double plot_lo = c.get_double("pairplot_lo", -4.0);
  const double plot_hi = c.get_double("pairplot_hi", 4.0);
  const int n_violin = static_cast<int>(c.get_int("violin_rows", 50));

  ExperimentReport report = ExperimentReport::make("wine", seed);
  report.echo("lambda", format_double(lambda));
  report.echo("validation_fraction", format_double(val_fraction));
  report.echo("conditional_index", std::to_string(cond_index));

  const FeatureMap features = FeatureMap::centered_moments(11);
  std::vector<WineColorRun> colors;

  for (const std::string color : {"red", "white"}) {
    const std::string path =
        resolve_data_path(c, "path_" + color, "winequality-" + color + ".csv");
    if (!std::filesystem::exists(path)) {
      throw DataError("dataset file not found: " + path +
                      " (run the fetch subcommand or set ENTROHERD_DATA_DIR)");
    }
    report.echo("path_" + color, path);

    Dataset data = load_wine_csv(path);
    SplitResult split = split_train_validation(data, val_fraction, seed);
    MomentSpec spec = standardize_from_data(features, split.train.rows, lambda);

    HerdingConfig cfg;
    cfg.eps_herding = 0.01;
    cfg.t_output = 500;
    cfg.t_burnin = 100;
    cfg.eta_learn = 0.2;
    cfg.k_update = 20;
    cfg.use_modified_weights = true;
    cfg.p_jump = 0.1;
    cfg.lambda = lambda;
    cfg.seed = seed;
    cfg = with_overrides(cfg, c, "entropic");
    if (colors.empty()) report.echo_config(cfg.to_kv(), "entropic.");

    const ComponentParams init =
        ComponentParams::gauss_diag(std::vector<double>(11, 0.0), std::vector<double>(11, 1.0));
    const HerdingRun run = run_entropic(features, spec, cfg, init);
    MixtureModel model = run.output_mixture();
    MvnModel mvn(split.train.rows);

    const std::string mix_path = dir + "/mixture_" + color + ".json";
    write_text_file(mix_path, model.to_json_string());
    report.add_artifact("mixture_" + color, mix_path);
    const std::string traj_path = dir + "/trajectory_" + color + ".csv";
    write_text_file(traj_path, run.trajectory_csv());
    report.add_artifact("trajectory_" + color, traj_path);

    report.set_metric("sse_" + color, moment_sse(model, features, spec));
    report.set_metric("ltilde_final_" + color, run.trajectory.back().ltilde);
    report.set_metric("entropy_mc_" + color, model.entropy_mc(1u << 16, seed).first);

    double log_jac = 0.0;
    for (const VariableLog& v : split.train.preprocessing) log_jac -= std::log(v.z_std);

    colors.push_back(WineColorRun{color, std::move(data), std::move(split), std::move(spec),
                                  std::move(model), std::move(mvn), log_jac});
  }

  // Per-color validation diagnostics in that color's z coordinates.
  for (const WineColorRun& cr : colors) {
    const std::vector<Point>& val = cr.split.validation.rows;

    std::ostringstream nll_csv;
    nll_csv << "row,nll_model,nll_mvn\n";
    double sum_model = 0.0, sum_mvn = 0.0;
    for (std::size_t r = 0; r < val.size(); ++r) {
      const double nm = -cr.model.log_density(val[r]);
      const double nv = -cr.mvn.log_density(val[r]);
      sum_model += nm;
      sum_mvn += nv;
      nll_csv << r << "," << csv_double(nm) << "," << csv_double(nv) << "\n";
    }
    const std::string nll_path = dir + "/nll_" + cr.color + ".csv";
    write_text_file(nll_path, nll_csv.str());
    report.add_artifact("nll_" + cr.color, nll_path);
    report.set_metric("mean_nll_model_" + cr.color,
                      sum_model / static_cast<double>(val.size()));
    report.set_metric("mean_nll_mvn_" + cr.color, sum_mvn / static_cast<double>(val.size()));

    std::ostringstream cond_csv;
    cond_csv << "row,truth,model_q10,model_q90,mvn_q10,mvn_q90\n";
    std::vector<std::pair<double, double>> iv_model, iv_mvn;
    std::vector<double> truths;
    std::ostringstream violin_csv;
    violin_csv << "row,x,density_model,density_mvn\n";
    for (std::size_t r = 0; r < val.size(); ++r) {
      const MixtureModel cond = cr.model.conditional_univariate(cond_index, val[r]);
      const double q10 = cond.quantile(0.10);
      const double q90 = cond.quantile(0.90);
      const auto [cm, cs] = cr.mvn.conditional_univariate(cond_index, val[r]);
      const double g10 = cm + cs * normal_quantile(0.10);
      const double g90 = cm + cs * normal_quantile(0.90);
      const double truth = val[r][static_cast<std::size_t>(cond_index)];
      iv_model.emplace_back(q10, q90);
      iv_mvn.emplace_back(g10, g90);
      truths.push_back(truth);
      cond_csv << r << "," << csv_double(truth) << "," << csv_double(q10) << ","
               << csv_double(q90) << "," << csv_double(g10) << "," << csv_double(g90) << "\n";
      if (r < static_cast<std::size_t>(n_violin)) {
        for (int g = 0; g <= 160; ++g) {
          const double x = -4.0 + 0.05 * g;
          const double dm = std::exp(cond.log_density(std::span<const double>(&x, 1)));
          const double dv = std::exp(normal_log_pdf(x, cm, cs));
          violin_csv << r << "," << csv_double(x) << "," << csv_double(dm) << ","
                     << csv_double(dv) << "\n";
        }
      }
    }
    const std::string cond_path = dir + "/conditional_" + cr.color + ".csv";
    write_text_file(cond_path, cond_csv.str());
    report.add_artifact("conditional_" + cr.color, cond_path);
    const std::string violin_path = dir + "/violin_" + cr.color + ".csv";
    write_text_file(violin_path, violin_csv.str());
    report.add_artifact("violin_" + cr.color, violin_path);
    report.set_metric("coverage_model_" + cr.color, quantile_coverage(iv_model, truths));
    report.set_metric("coverage_mvn_" + cr.color, quantile_coverage(iv_mvn, truths));

    const std::string pp_model_path = dir + "/pairplot_model_" + cr.color + ".csv";
    write_text_file(pp_model_path, pairplot_model_csv(cr.model, plot_lo, plot_hi, cell));
    report.add_artifact("pairplot_model_" + cr.color, pp_model_path);
    const std::string pp_data_path = dir + "/pairplot_data_" + cr.color + ".csv";
    write_text_file(pp_data_path,
                    pairplot_data_csv(cr.split.train.rows, 11, plot_lo, plot_hi, cell));
    report.add_artifact("pairplot_data_" + cr.color, pp_data_path);
  }

  // Color classifier: difference of model log densities in the shared
  // (log10-transformed, unscaled) coordinates; Jacobians of the per-color
  // z-scalings included.
  const auto color_log_density = [&](const WineColorRun& cr, const Point& pre) {
    Point z(pre.size());
    for (std::size_t v = 0; v < pre.size(); ++v) {
      const VariableLog& log = cr.split.train.preprocessing[v];
      z[v] = (pre[v] - log.z_mean) / log.z_std;
    }
    return cr.model.log_density(z) + cr.log_jacobian;
  };
  const auto to_pre = [](const WineColorRun& cr, const Point& zrow) {
    Point pre(zrow.size());
    for (std::size_t v = 0; v < zrow.size(); ++v) {
      const VariableLog& log = cr.split.train.preprocessing[v];
      pre[v] = zrow[v] * log.z_std + log.z_mean;
    }
    return pre;
  };
  const WineColorRun& red = colors[0];
  const WineColorRun& white = colors[1];
  std::vector<double> scores_red, scores_white;
  for (const Point& zrow : red.split.validation.rows) {
    const Point pre = to_pre(red, zrow);
    scores_red.push_back(color_log_density(red, pre) - color_log_density(white, pre));
  }
  for (const Point& zrow : white.split.validation.rows) {
    const Point pre = to_pre(white, zrow);
    scores_white.push_back(color_log_density(red, pre) - color_log_density(white, pre));
  }
  report.set_metric("auc", auc(scores_red, scores_white));

  report.wall_clock_sec = timer.seconds();
  report.save(dir + "/report.json");
  return report;
}

}  // namespace entroherd
