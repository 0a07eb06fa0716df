#include "mergesim/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mergesim {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

namespace {

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

struct Writer {
  json* node;

  template <class T>
  void field(const char* key, T& value) {
    (*node)[key] = value;
  }
  template <class F>
  void section(const char* key, F&& fn) {
    json sub = json::object();
    Writer w{&sub};
    fn(w);
    (*node)[key] = std::move(sub);
  }
  static constexpr bool reading = false;
};

struct Reader {
  const json* node;
  std::string path;
  std::set<std::string> seen;

  template <class T>
  void field(const char* key, T& value) {
    seen.insert(key);
    if (!node->contains(key)) return;
    try {
      value = node->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(join(path, key), std::string("wrong type (") + e.what() + ")");
    }
  }
  template <class F>
  void section(const char* key, F&& fn) {
    seen.insert(key);
    if (!node->contains(key)) return;
    const json& sub = node->at(key);
    if (!sub.is_object()) throw ConfigError(join(path, key), "expected an object");
    Reader r{&sub, join(path, key), {}};
    fn(r);
    r.finish();
  }
  void finish() const {
    for (const auto& [k, v] : node->items()) {
      if (!seen.count(k)) throw ConfigError(join(path, k), "unknown key");
    }
  }
  static constexpr bool reading = true;
};

template <class V>
void describe_style(V& v, StyleParams& s) {
  v.section("idm", [&](auto& w) {
    w.field("desired_speed", s.idm.desired_speed);
    w.field("time_gap", s.idm.time_gap);
    w.field("jam_distance", s.idm.jam_distance);
    w.field("max_accel", s.idm.max_accel);
    w.field("comfort_decel", s.idm.comfort_decel);
    w.field("exponent", s.idm.exponent);
  });
  v.section("mobil", [&](auto& w) {
    w.field("politeness", s.mobil.politeness);
    w.field("gain_threshold", s.mobil.gain_threshold);
    w.field("safe_decel", s.mobil.safe_decel);
  });
}

// Single description of every field, shared by the writer and the reader.
template <class V>
void describe(V& v, RunConfig& c, bool with_output) {
  EnvConfig& e = c.env;
  v.section("layout", [&](auto& w) {
    w.field("through_length", e.layout.through_length);
    w.field("merge_start", e.layout.merge_start);
    w.field("merge_length", e.layout.merge_length);
    w.field("ramp_approach_length", e.layout.ramp_approach_length);
    w.field("lane_width", e.layout.lane_width);
    w.field("coil_positions", e.layout.coil_positions);
  });
  v.section("dynamics", [&](auto& w) {
    w.field("dt", e.timing.dt);
    w.field("substeps_per_decision", e.timing.substeps_per_decision);
    w.field("speed_kp", e.gains.speed_kp);
    w.field("lateral_kp", e.gains.lateral_kp);
    w.field("heading_kp", e.gains.heading_kp);
    w.field("speed_step", e.gains.speed_step);
    w.field("min_target_speed", e.gains.min_target_speed);
    w.field("max_target_speed", e.gains.max_target_speed);
  });
  v.section("styles", [&](auto& w) {
    w.section("aggressive", [&](auto& s) { describe_style(s, e.styles.aggressive); });
    w.section("normal", [&](auto& s) { describe_style(s, e.styles.normal); });
    w.section("timid", [&](auto& s) { describe_style(s, e.styles.timid); });
  });
  v.field("intent_horizon", e.intent_horizon);
  v.section("safety", [&](auto& w) {
    w.field("alpha", e.safety.alpha);
    w.field("time_headway", e.safety.time_headway);
    w.field("headway_clamp", e.safety.headway_clamp);
    w.field("min_speed", e.safety.min_speed);
    w.field("noise_variance", e.safety.noise_variance);
    w.field("conflict_inflation", e.safety.conflict_inflation);
    w.field("perception_range", e.safety.perception_range);
  });
  v.section("reward", [&](auto& w) {
    w.field("omega", e.reward.omega);
    w.field("min_speed", e.reward.min_speed);
    w.field("max_speed", e.reward.max_speed);
    w.field("time_headway", e.reward.time_headway);
    w.field("headway_clamp", e.reward.headway_clamp);
    w.field("merging_sign", e.reward.merging_sign);
  });
  v.section("observation", [&](auto& w) {
    w.field("rows", e.observation.rows);
    w.field("position_scale", e.observation.position_scale);
    w.field("speed_scale", e.observation.speed_scale);
  });
  v.section("spawn", [&](auto& w) {
    w.field("through_min_x", e.spawn.through_min_x);
    w.field("through_max_x", e.spawn.through_max_x);
    w.field("ramp_min_x", e.spawn.ramp_min_x);
    w.field("ramp_max_x", e.spawn.ramp_max_x);
    w.field("min_spacing", e.spawn.min_spacing);
    w.field("base_speed", e.spawn.base_speed);
    w.field("speed_noise", e.spawn.speed_noise);
    w.field("max_attempts", e.spawn.max_attempts);
  });
  v.section("traffic", [&](auto& w) {
    std::string level(to_string(e.mode.level));
    w.field("mode", level);
    if constexpr (std::decay_t<decltype(w)>::reading) {
      try {
        e.mode.level = traffic_level_from_string(level);
      } catch (const std::invalid_argument&) {
        throw ConfigError(join(w.path, "mode"), "expected \"easy\" or \"hard\", got \"" + level + "\"");
      }
    }
    w.field("heterogeneous", e.mode.heterogeneous);
    w.field("max_cavs", e.max_cavs);
    w.field("horizon", e.horizon);
  });
  v.section("trainer", [&](auto& w) {
    w.field("gamma", c.ppo.gamma);
    w.field("lambda", c.ppo.lambda);
    w.field("clip", c.ppo.clip);
    w.field("learning_rate", c.ppo.learning_rate);
    w.field("epochs", c.ppo.epochs);
    w.field("minibatch", c.ppo.minibatch);
    w.field("value_coef", c.ppo.value_coef);
    w.field("entropy_coef", c.ppo.entropy_coef);
    w.field("max_grad_norm", c.ppo.max_grad_norm);
    w.field("hidden_units", c.ppo.hidden_units);
    w.field("hidden_layers", c.ppo.hidden_layers);
    w.field("total_steps", c.total_steps);
    w.field("n_envs", c.n_envs);
    w.field("rollout_steps", c.rollout_steps);
    w.field("eval_every_episodes", c.eval_every_episodes);
    w.field("eval_episodes", c.eval_episodes);
    w.field("store_corrected_action", c.store_corrected_action);
  });
  v.field("seeds", c.seeds);
  v.section("eval", [&](auto& w) {
    w.field("episodes", c.eval.episodes);
    w.field("custom_zone", c.eval.custom_zone);
    w.field("zone_x_min", c.eval.pet_zone.x_min);
    w.field("zone_x_max", c.eval.pet_zone.x_max);
    w.field("tms_window", c.eval.tms_window);
  });
  v.section("toggles", [&](auto& w) {
    w.field("sem_enabled", e.sem_enabled);
    w.field("igm_enabled", e.igm_enabled);
    w.field("curriculum_from", c.curriculum_from);
  });
  if (with_output) v.field("output", c.output);
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace

void validate(const RunConfig& c) {
  const EnvConfig& e = c.env;
  try {
    build_layout(e.layout);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("layout", ex.what());
  }
  require(e.timing.dt > 0.0, "dynamics.dt", "must be positive");
  require(e.timing.substeps_per_decision >= 1, "dynamics.substeps_per_decision", "must be >= 1");
  require(e.gains.speed_kp > 0.0, "dynamics.speed_kp", "must be positive");
  require(e.gains.lateral_kp > 0.0, "dynamics.lateral_kp", "must be positive");
  require(e.gains.heading_kp > 0.0, "dynamics.heading_kp", "must be positive");
  require(e.gains.speed_step > 0.0, "dynamics.speed_step", "must be positive");
  require(e.gains.min_target_speed >= 0.0, "dynamics.min_target_speed", "must be non-negative");
  require(e.gains.max_target_speed > e.gains.min_target_speed && e.gains.max_target_speed <= kMaxPhysicalSpeed,
          "dynamics.max_target_speed", "must exceed min_target_speed and not exceed 45");
  const std::pair<const char*, const StyleParams*> styles[] = {
      {"aggressive", &e.styles.aggressive}, {"normal", &e.styles.normal}, {"timid", &e.styles.timid}};
  for (const auto& [name, s] : styles) {
    try {
      validate(s->idm);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("styles.") + name + ".idm", ex.what());
    }
    try {
      validate(s->mobil);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("styles.") + name + ".mobil", ex.what());
    }
  }
  require(e.intent_horizon >= 1, "intent_horizon", "must be >= 1");
  for (std::size_t i = 0; i < e.safety.alpha.size(); ++i) {
    require(e.safety.alpha[i] > 0.0, "safety.alpha[" + std::to_string(i) + "]", "priority weights must be positive");
  }
  require(e.safety.time_headway > 0.0, "safety.time_headway", "must be positive");
  require(e.safety.headway_clamp > 0.0, "safety.headway_clamp", "must be positive");
  require(e.safety.min_speed > 0.0, "safety.min_speed", "must be positive");
  require(e.safety.noise_variance >= 0.0, "safety.noise_variance", "must be non-negative");
  require(e.safety.conflict_inflation >= 0.0, "safety.conflict_inflation", "must be non-negative");
  require(e.safety.perception_range > 0.0, "safety.perception_range", "must be positive");
  for (std::size_t i = 0; i < e.reward.omega.size(); ++i) {
    require(e.reward.omega[i] > 0.0, "reward.omega[" + std::to_string(i) + "]",
            "weighting coefficients must be positive");
  }
  require(e.reward.max_speed > e.reward.min_speed, "reward.max_speed", "must exceed reward.min_speed");
  require(e.reward.time_headway > 0.0, "reward.time_headway", "must be positive");
  require(e.reward.headway_clamp > 0.0, "reward.headway_clamp", "must be positive");
  require(e.reward.merging_sign == 1.0 || e.reward.merging_sign == -1.0, "reward.merging_sign", "must be 1 or -1");
  require(e.observation.rows >= 1, "observation.rows", "must be >= 1");
  require(e.observation.position_scale > 0.0, "observation.position_scale", "must be positive");
  require(e.observation.speed_scale > 0.0, "observation.speed_scale", "must be positive");
  require(e.spawn.through_max_x >= e.spawn.through_min_x, "spawn.through_max_x", "must be >= through_min_x");
  require(e.spawn.ramp_max_x >= e.spawn.ramp_min_x, "spawn.ramp_max_x", "must be >= ramp_min_x");
  require(e.spawn.min_spacing > 0.0, "spawn.min_spacing", "must be positive");
  require(e.spawn.base_speed >= 0.0, "spawn.base_speed", "must be non-negative");
  require(e.spawn.speed_noise >= 0.0, "spawn.speed_noise", "must be non-negative");
  require(e.spawn.max_attempts >= 1, "spawn.max_attempts", "must be >= 1");
  require(e.max_cavs >= spawn_range(e.mode.level).second, "traffic.max_cavs",
          "must cover the CAV spawn range of the traffic mode");
  require(e.horizon >= 1, "traffic.horizon", "must be >= 1");

  const PpoHyper& h = c.ppo;
  require(h.gamma > 0.0 && h.gamma <= 1.0, "trainer.gamma", "must lie in (0, 1]");
  require(h.lambda > 0.0 && h.lambda <= 1.0, "trainer.lambda", "must lie in (0, 1]");
  require(h.clip > 0.0 && h.clip < 1.0, "trainer.clip", "must lie in (0, 1)");
  require(h.learning_rate > 0.0, "trainer.learning_rate", "must be positive");
  require(h.epochs >= 1, "trainer.epochs", "must be >= 1");
  require(h.minibatch >= 1, "trainer.minibatch", "must be >= 1");
  require(h.value_coef >= 0.0, "trainer.value_coef", "must be non-negative");
  require(h.entropy_coef >= 0.0, "trainer.entropy_coef", "must be non-negative");
  require(h.max_grad_norm > 0.0, "trainer.max_grad_norm", "must be positive");
  require(h.hidden_units >= 1, "trainer.hidden_units", "must be >= 1");
  require(h.hidden_layers >= 1, "trainer.hidden_layers", "must be >= 1");
  require(c.total_steps >= 0, "trainer.total_steps", "must be non-negative");
  require(c.n_envs >= 1, "trainer.n_envs", "must be >= 1");
  require(c.rollout_steps >= 1, "trainer.rollout_steps", "must be >= 1");
  require(c.eval_every_episodes >= 1, "trainer.eval_every_episodes", "must be >= 1");
  require(c.eval_episodes >= 1, "trainer.eval_episodes", "must be >= 1");
  require(!c.seeds.empty(), "seeds", "at least one seed is required");
  require(c.eval.episodes >= 1, "eval.episodes", "must be >= 1");
  require(c.eval.tms_window >= 1, "eval.tms_window", "must be >= 1");
  require(c.eval.pet_zone.x_max > c.eval.pet_zone.x_min, "eval.zone_x_max", "must exceed zone_x_min");
  require(!e.sem_enabled || e.igm_enabled, "toggles.sem_enabled", "the safety module needs the intent generator");
}

std::string to_json_text(const RunConfig& cfg, bool include_output) {
  json j = json::object();
  Writer w{&j};
  RunConfig copy = cfg;
  describe(w, copy, include_output);
  return j.dump(2);
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  const bool blank = std::all_of(text.begin(), text.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); });
  if (blank) return cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  Reader r{&j, "", {}};
  describe(r, cfg, true);
  r.finish();
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json_text(cfg, false)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_config_echo(const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "config.json").string());
  out << to_json_text(cfg) << '\n';
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.env = cfg.env;
  t.ppo = cfg.ppo;
  t.total_steps = cfg.total_steps;
  t.seed = seed;
  t.n_envs = cfg.n_envs;
  t.rollout_steps = cfg.rollout_steps;
  t.eval_every_episodes = cfg.eval_every_episodes;
  t.eval_episodes = cfg.eval_episodes;
  t.store_corrected_action = cfg.store_corrected_action;
  t.curriculum_from = cfg.curriculum_from;
  t.config_hash = config_hash(cfg);
  return t;
}

}  // namespace mergesim
