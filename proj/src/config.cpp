#include "entroherd/config.hpp"

#include <algorithm>
#include <cctype>

#include "entroherd/errors.hpp"

namespace entroherd {

void HerdingConfig::validate() const {
  if (epsilon_schedule == EpsSchedule::Constant &&
      !(eps_herding > 0.0 && eps_herding < 1.0)) {
    throw ConfigError("eps_herding must be in (0, 1)");
  }
  if (t_output < 1) throw ConfigError("t_output must be >= 1");
  if (t_burnin < 0) throw ConfigError("t_burnin must be >= 0");
  if (!(eta_learn > 0.0)) throw ConfigError("eta_learn must be positive");
  if (k_update < 1) throw ConfigError("k_update must be >= 1");
  if (!(p_jump >= 0.0 && p_jump <= 1.0)) throw ConfigError("p_jump must be in [0, 1]");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

KeyValueConfig HerdingConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set_double("eps_herding", eps_herding);
  kv.set_int("t_output", t_output);
  kv.set_int("t_burnin", t_burnin);
  kv.set_double("eta_learn", eta_learn);
  kv.set_int("k_update", k_update);
  kv.set_bool("use_modified_weights", use_modified_weights);
  kv.set_double("p_jump", p_jump);
  kv.set_double("lambda", lambda);
  kv.set("seed", std::to_string(seed));
  kv.set("epsilon_schedule",
         epsilon_schedule == EpsSchedule::Harmonic ? "harmonic" : "constant");
  return kv;
}

namespace {

EpsSchedule parse_schedule(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "constant") return EpsSchedule::Constant;
  if (v == "harmonic") return EpsSchedule::Harmonic;
  throw ConfigError("epsilon_schedule must be 'constant' or 'harmonic', got '" + v + "'");
}

}  // namespace

HerdingConfig HerdingConfig::from_kv(const KeyValueConfig& kv) {
  return HerdingConfig{}.overridden_by(kv);
}

HerdingConfig HerdingConfig::overridden_by(const KeyValueConfig& kv) const {
  HerdingConfig c = *this;
  c.eps_herding = kv.get_double("eps_herding", c.eps_herding);
  c.t_output = static_cast<int>(kv.get_int("t_output", c.t_output));
  c.t_burnin = static_cast<int>(kv.get_int("t_burnin", c.t_burnin));
  c.eta_learn = kv.get_double("eta_learn", c.eta_learn);
  c.k_update = static_cast<int>(kv.get_int("k_update", c.k_update));
  c.use_modified_weights = kv.get_bool("use_modified_weights", c.use_modified_weights);
  c.p_jump = kv.get_double("p_jump", c.p_jump);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.seed = kv.get_u64("seed", c.seed);
  if (kv.has("epsilon_schedule")) {
    c.epsilon_schedule = parse_schedule(kv.get_string("epsilon_schedule"));
  }
  c.validate();
  return c;
}

}  // namespace entroherd
