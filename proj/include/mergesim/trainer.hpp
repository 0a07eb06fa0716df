#ifndef MERGESIM_TRAINER_HPP_
#define MERGESIM_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mergesim/env.hpp"
#include "mergesim/mappo.hpp"

namespace mergesim {

struct TrainConfig {
  EnvConfig env{};
  PpoHyper ppo{};
  long total_steps = 100000;  // environment decision steps, all workers
  std::uint64_t seed = 0;
  int n_envs = 4;
  int rollout_steps = 128;  // per worker and update
  int eval_every_episodes = 200;
  int eval_episodes = 3;
  bool store_corrected_action = false;
  std::string curriculum_from;  // checkpoint to initialize from, optional
  std::uint64_t config_hash = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Architecture {
  int obs_size = 0;
  int global_size = 0;
  int hidden_units = 0;
  int hidden_layers = 0;
  int actions = kNumActions;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

Architecture architecture_of(const EnvConfig& env, const PpoHyper& h);

struct Checkpoint {
  Architecture arch;
  std::uint64_t seed = 0;
  long step = 0;
  std::uint64_t config_hash = 0;
  Policy policy;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error on unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Throws std::invalid_argument naming the mismatching dimension.
void require_compatible(const Architecture& expected, const Architecture& found);

struct CurvePoint {
  long step = 0;
  int episodes = 0;
  double mean_reward = 0.0;
  double avg_speed = 0.0;
  double collision_rate = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

struct TrainResult {
  Policy policy;
  std::vector<CurvePoint> curve;
  long steps = 0;
  int episodes = 0;
  std::vector<UpdateStats> updates;
};

// Seeds of the fixed evaluation scenes derived from `seed`.
std::uint64_t eval_episode_seed(std::uint64_t seed, int episode);

// Greedy rollouts of `episodes` recorded episodes on the fixed evaluation
// scenes (episodes run in parallel; results are ordered by episode).
std::vector<EpisodeRecord> evaluate(const Policy& policy, const EnvConfig& env, int episodes,
                                    std::uint64_t seed);

// Mean episode reward, mean CAV speed and collision rate of recorded runs.
CurvePoint curve_point(long step, int episodes_done, std::span<const EpisodeRecord> records);

using ProgressFn = std::function<void(const CurvePoint&)>;

// Collect/update loop with periodic greedy evaluation (also at step 0).
TrainResult train(const TrainConfig& cfg, const ProgressFn& progress = {});

}  // namespace mergesim

#endif  // MERGESIM_TRAINER_HPP_
