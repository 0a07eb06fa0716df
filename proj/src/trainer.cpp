#include "mergesim/trainer.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mergesim/metrics.hpp"

namespace mergesim {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json to_json_vector(const nn::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nn::Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const nn::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Architecture architecture_of(const EnvConfig& env, const PpoHyper& h) {
  const int obs = env.observation.rows * kObservationFeatures;
  return {obs, obs * env.max_cavs, h.hidden_units, h.hidden_layers, kNumActions};
}

void require_compatible(const Architecture& expected, const Architecture& found) {
  auto check = [](const char* name, int want, int got) {
    if (want != got) {
      throw std::invalid_argument(std::string("checkpoint architecture mismatch: ") + name + " is " +
                                  std::to_string(got) + ", expected " + std::to_string(want));
    }
  };
  check("obs_size", expected.obs_size, found.obs_size);
  check("global_size", expected.global_size, found.global_size);
  check("hidden_units", expected.hidden_units, found.hidden_units);
  check("hidden_layers", expected.hidden_layers, found.hidden_layers);
  check("actions", expected.actions, found.actions);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const json j = {
      {"format_version", kCheckpointVersion},
      {"architecture",
       {{"obs_size", c.arch.obs_size}, {"global_size", c.arch.global_size},
        {"hidden_units", c.arch.hidden_units}, {"hidden_layers", c.arch.hidden_layers},
        {"actions", c.arch.actions}}},
      {"seed", c.seed},
      {"step", c.step},
      {"config_hash", c.config_hash},
      {"actor", to_json_vector(c.policy.actor.flat())},
      {"critic", to_json_vector(c.policy.critic.flat())},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint version");
    }
    Checkpoint c;
    const json& a = j.at("architecture");
    c.arch = {a.at("obs_size").get<int>(), a.at("global_size").get<int>(), a.at("hidden_units").get<int>(),
              a.at("hidden_layers").get<int>(), a.at("actions").get<int>()};
    if (c.arch.actions != kNumActions) throw std::runtime_error("checkpoint action count differs");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.step = j.at("step").get<long>();
    c.config_hash = j.at("config_hash").get<std::uint64_t>();
    PpoHyper h;
    h.hidden_units = c.arch.hidden_units;
    h.hidden_layers = c.arch.hidden_layers;
    c.policy = Policy::create(c.arch.obs_size, c.arch.global_size, h, 0);
    c.policy.actor.set_flat(vector_from(j.at("actor")));
    c.policy.critic.set_flat(vector_from(j.at("critic")));
    return c;
  } catch (const std::exception& e) {
    throw std::runtime_error("bad checkpoint " + path.string() + ": " + e.what());
  }
}

void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,episodes,mean_reward,avg_speed,collision_rate\n";
  for (const auto& p : curve) {
    out << p.step << ',' << p.episodes << ',' << format_double(p.mean_reward) << ','
        << format_double(p.avg_speed) << ',' << format_double(p.collision_rate) << '\n';
  }
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int episode) {
  return mix(mix(seed ^ 0x5eedba5eULL) + static_cast<std::uint64_t>(episode));
}

std::vector<EpisodeRecord> evaluate(const Policy& policy, const EnvConfig& env, int episodes,
                                    std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<EpisodeRecord> out(static_cast<std::size_t>(episodes));
#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < episodes; ++e) {
    MergingEnv sim(env);
    sim.set_recording(true);
    sim.reset(eval_episode_seed(seed, e), e);
    std::mt19937_64 unused(0);
    while (!sim.done()) {
      const auto live = sim.live_cav_ids();
      nn::Matrix obs(static_cast<Eigen::Index>(live.size()), sim.observation_size());
      for (std::size_t i = 0; i < live.size(); ++i) {
        const auto o = sim.observe(live[i]);
        obs.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(o.data.data(), static_cast<Eigen::Index>(o.data.size()));
      }
      const auto choice = choose_actions(policy, obs, true, unused);
      std::map<VehicleId, HighLevelAction> proposed;
      for (std::size_t i = 0; i < live.size(); ++i) proposed[live[i]] = action_from_index(choice[i].action);
      sim.step(proposed);
    }
    out[static_cast<std::size_t>(e)] = sim.record();
  }
  return out;
}

CurvePoint curve_point(long step, int episodes_done, std::span<const EpisodeRecord> records) {
  CurvePoint p;
  p.step = step;
  p.episodes = episodes_done;
  double total = 0.0;
  for (const auto& r : records) total += episode_reward(r);
  p.mean_reward = total / static_cast<double>(records.size());
  p.avg_speed = average_speed(records);
  p.collision_rate = collision_rate(records);
  return p;
}

TrainResult train(const TrainConfig& cfg, const ProgressFn& progress) {
  validate(cfg.ppo);
  if (cfg.n_envs < 1 || cfg.rollout_steps < 1) throw std::invalid_argument("n_envs and rollout_steps must be >= 1");
  if (cfg.eval_episodes < 1 || cfg.eval_every_episodes < 1) {
    throw std::invalid_argument("evaluation cadence and size must be >= 1");
  }
  const Architecture arch = architecture_of(cfg.env, cfg.ppo);
  TrainResult res;
  res.policy = Policy::create(arch.obs_size, arch.global_size, cfg.ppo, cfg.seed);
  if (!cfg.curriculum_from.empty()) {
    Checkpoint init = load_checkpoint(cfg.curriculum_from);
    require_compatible(arch, init.arch);
    res.policy = std::move(init.policy);
  }
  Optimizers opt = Optimizers::create(res.policy, cfg.ppo.learning_rate);
  std::mt19937_64 rng(mix(cfg.seed ^ 0xa5a5a5a5ULL));

  std::vector<RolloutWorker> workers;
  for (int w = 0; w < cfg.n_envs; ++w) workers.emplace_back(cfg.env, cfg.seed, w);

  auto eval_now = [&] {
    const auto recs = evaluate(res.policy, cfg.env, cfg.eval_episodes, cfg.seed);
    res.curve.push_back(curve_point(res.steps, res.episodes, recs));
    if (progress) progress(res.curve.back());
  };
  eval_now();

  int next_eval = cfg.eval_every_episodes;
  RolloutOptions opts;
  opts.store_corrected_action = cfg.store_corrected_action;
  while (res.steps < cfg.total_steps) {
    const long remaining = cfg.total_steps - res.steps;
    const int per_worker = static_cast<int>(
        std::min<long>(cfg.rollout_steps, (remaining + cfg.n_envs - 1) / cfg.n_envs));
    RolloutBuffer buf = collect_rollout(workers, res.policy, per_worker, opts);
    buf.finalize(cfg.ppo.gamma, cfg.ppo.lambda);
    res.updates.push_back(update(buf, res.policy, opt, cfg.ppo, rng));
    res.steps += buf.env_steps;
    res.episodes += buf.episodes_finished;
    if (res.episodes >= next_eval) {
      eval_now();
      while (next_eval <= res.episodes) next_eval += cfg.eval_every_episodes;
    }
  }
  if (res.curve.back().step != res.steps) eval_now();
  return res;
}

}  // namespace mergesim
