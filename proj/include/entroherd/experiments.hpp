#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entroherd/kv.hpp"

namespace entroherd {

// Flat run summary written next to the artifacts. The canonical metric keys
// (sse, entropy, kl, tv, auc, coverage) are always present; inapplicable
// ones are explicit nulls. Additional qualified metrics may follow.
struct ExperimentReport {
  std::string experiment;
  std::uint64_t seed = 0;
  double wall_clock_sec = 0.0;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::pair<std::string, std::optional<double>>> metrics;
  std::vector<std::pair<std::string, std::string>> artifacts;

  static ExperimentReport make(const std::string& experiment, std::uint64_t seed);

  void echo(const std::string& key, const std::string& value);
  void echo_config(const KeyValueConfig& kv, const std::string& prefix = "");
  // Non-finite values are stored as null (JSON has no inf).
  void set_metric(const std::string& name, double value);
  void set_metric_null(const std::string& name);
  std::optional<double> metric(const std::string& name) const;
  void add_artifact(const std::string& label, const std::string& path);

  std::string to_json_string(int indent = 2) const;
  void save(const std::string& path) const;
};

// Checks a report against docs/report-schema.json (required keys, types,
// canonical metric keys, no extra top-level keys). Throws on violation.
void validate_report_json(const std::string& text);

struct RunOptions {
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool sweep = false;
  KeyValueConfig config;
};

ExperimentReport cmd_bimodal(const RunOptions& opt);
ExperimentReport cmd_boltzmann(const RunOptions& opt);
ExperimentReport cmd_wine(const RunOptions& opt);
ExperimentReport cmd_fetch(const RunOptions& opt);

// Oracle and invariant checks (finite-difference gradients including a
// deliberately corrupted negative control, entropy-gap identity, fixed-point
// optimality, point-herding equivalence). Prints one line per check and
// returns the number of failures.
int cmd_selftest(std::ostream& out);

// Dataset file resolution: explicit config key, then $ENTROHERD_DATA_DIR,
// then ./data.
std::string resolve_data_path(const KeyValueConfig& config, const std::string& key,
                              const std::string& filename);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace entroherd
