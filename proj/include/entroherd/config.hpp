#pragma once

#include <cstdint>

#include "entroherd/kv.hpp"

namespace entroherd {

enum class EpsSchedule { Constant, Harmonic };

// Knobs for one herding run. Constant schedules use eps_herding every step;
// Harmonic uses eps(T) = 1/(T+1), which makes the running mixture a uniform
// average over all components seen so far (the classic-herding limit).
struct HerdingConfig {
  double eps_herding = 0.05;
  int t_output = 100;
  int t_burnin = 0;
  double eta_learn = 0.2;
  int k_update = 50;
  bool use_modified_weights = false;
  double p_jump = 0.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  EpsSchedule epsilon_schedule = EpsSchedule::Constant;

  int t_total() const { return t_burnin + t_output; }

  double eps_at(int t) const {
    return epsilon_schedule == EpsSchedule::Harmonic ? 1.0 / static_cast<double>(t + 1)
                                                     : eps_herding;
  }

  void validate() const;

  KeyValueConfig to_kv() const;
  static HerdingConfig from_kv(const KeyValueConfig& kv);
  // Like from_kv but starts from *this and only overrides present keys.
  HerdingConfig overridden_by(const KeyValueConfig& kv) const;
};

}  // namespace entroherd
