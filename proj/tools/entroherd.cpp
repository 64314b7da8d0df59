#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "entroherd/errors.hpp"
#include "entroherd/experiments.hpp"
#include "entroherd/kv.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"entroherd: moment-matching mixture models via herding dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool sweep = false;
  std::vector<CLI::Option*> seed_opts;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value settings file");
    sub->add_option("--out", out_dir, "output directory (default: out)");
    seed_opts.push_back(
        sub->add_option("--seed", seed, "run seed (default: seed key in config, else 0)"));
  };

  CLI::App* bimodal =
      app.add_subcommand("bimodal", "double-well 1-d target: four herding variants");
  add_common(bimodal);
  CLI::App* boltzmann =
      app.add_subcommand("boltzmann", "pairwise spin target: scatter plus optional sweep");
  add_common(boltzmann);
  boltzmann->add_flag("--sweep", sweep, "also run the lambda x T_output sweep");
  CLI::App* wine =
      app.add_subcommand("wine", "wine dataset: per-color density models and validation");
  add_common(wine);
  CLI::App* selftest =
      app.add_subcommand("selftest", "gradient, identity and equivalence checks");
  CLI::App* fetch = app.add_subcommand("fetch", "download the wine csv files");
  add_common(fetch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (selftest->parsed()) {
    return entroherd::cmd_selftest(std::cout) == 0 ? 0 : 4;
  }

  entroherd::RunOptions opt;
  opt.out_dir = out_dir;
  opt.sweep = sweep;
  if (!config_path.empty()) opt.config = entroherd::KeyValueConfig::load(config_path);
  bool seed_given = false;
  for (const CLI::Option* o : seed_opts) seed_given = seed_given || o->count() > 0;
  opt.seed = seed_given ? seed : opt.config.get_u64("seed", 0);

  entroherd::ExperimentReport report = [&]() {
    if (bimodal->parsed()) return entroherd::cmd_bimodal(opt);
    if (boltzmann->parsed()) return entroherd::cmd_boltzmann(opt);
    if (wine->parsed()) return entroherd::cmd_wine(opt);
    return entroherd::cmd_fetch(opt);
  }();
  std::cout << report.to_json_string();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const entroherd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const entroherd::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const entroherd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
