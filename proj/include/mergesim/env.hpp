#ifndef MERGESIM_ENV_HPP_
#define MERGESIM_ENV_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mergesim/geometry.hpp"
#include "mergesim/hv_behavior.hpp"
#include "mergesim/intent.hpp"
#include "mergesim/record.hpp"
#include "mergesim/safety.hpp"
#include "mergesim/vehicle.hpp"

namespace mergesim {

inline constexpr int kObservationFeatures = 5;

enum class TrafficLevel : std::uint8_t { Easy, Hard };

std::string_view to_string(TrafficLevel l);
TrafficLevel traffic_level_from_string(std::string_view s);

struct TrafficMode {
  TrafficLevel level = TrafficLevel::Easy;
  bool heterogeneous = false;

  friend bool operator==(const TrafficMode&, const TrafficMode&) = default;
};

struct SpawnParams {
  double through_min_x = 0.0;
  double through_max_x = 220.0;
  double ramp_min_x = 100.0;
  double ramp_max_x = 260.0;
  double min_spacing = 15.0;
  double base_speed = 25.0;
  double speed_noise = 2.0;
  int max_attempts = 100;

  friend bool operator==(const SpawnParams&, const SpawnParams&) = default;
};

struct RewardParams {
  // Collision, stable-speed, headway and merging-cost weights.
  std::array<double, 4> omega{200.0, 1.0, 4.0, 4.0};
  double min_speed = 10.0;
  double max_speed = 30.0;
  double time_headway = 1.2;
  double headway_clamp = 5.0;
  double merging_sign = -1.0;

  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

struct ObservationParams {
  int rows = 5;
  double position_scale = 100.0;
  double speed_scale = 30.0;

  friend bool operator==(const ObservationParams&, const ObservationParams&) = default;
};

struct EnvConfig {
  LayoutParams layout{};
  ControllerGains gains{};
  TimingParams timing{};
  StyleTable styles{};
  int intent_horizon = 8;
  SafetyParams safety{};
  RewardParams reward{};
  ObservationParams observation{};
  SpawnParams spawn{};
  TrafficMode mode{};
  int max_cavs = 6;
  int horizon = 100;
  bool sem_enabled = true;
  bool igm_enabled = true;

  RolloutSettings rollout() const { return {gains, timing, intent_horizon}; }
  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

// rows x 5 matrix [isobservable, x, y, vx, vy], row 0 = ego.
struct ObservationMatrix {
  int rows = 0;
  std::vector<double> data;

  double at(int r, int c) const { return data[static_cast<std::size_t>(r * kObservationFeatures + c)]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r * kObservationFeatures + c)]; }
};

// Inclusive spawn-count range for one vehicle class.
std::pair<int, int> spawn_range(TrafficLevel level);

// Per-term reward for one agent's post-transition state.
RewardTerms compute_reward(const RoadLayout& layout, const RewardParams& p, const VehicleState& ego,
                           double headway, bool collided);

struct StepInfo {
  std::vector<std::pair<VehicleId, VehicleId>> collisions;
  std::vector<CorrectionEvent> corrections;
  std::vector<ConflictReport> conflicts;
  std::vector<VehicleId> exited;
  std::vector<VehicleId> ignored_actions;
  std::map<VehicleId, RewardTerms> reward_terms;
  std::map<VehicleId, HighLevelAction> executed;
  TerminalCause cause = TerminalCause::None;
};

struct StepOutcome {
  std::map<VehicleId, ObservationMatrix> observations;  // every spawned CAV
  std::map<VehicleId, double> rewards;                  // every spawned CAV
  std::vector<VehicleId> acted;     // CAVs alive when the step began
  std::vector<VehicleId> finished;  // CAVs whose trajectory ended this step
  bool done = false;
  StepInfo info;
};

class MergingEnv {
 public:
  explicit MergingEnv(EnvConfig config);

  std::map<VehicleId, ObservationMatrix> reset(std::uint64_t seed, int episode_index = 0);
  StepOutcome step(const std::map<VehicleId, HighLevelAction>& proposed);

  ObservationMatrix observe(VehicleId id) const;
  // Ego observation followed by the other CAVs' in id order, zero padded to
  // max_cavs blocks.
  std::vector<double> global_state(VehicleId ego) const;

  const EnvConfig& config() const { return cfg_; }
  const RoadLayout& layout() const { return layout_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const std::vector<VehicleId>& cav_ids() const { return cav_ids_; }
  std::vector<VehicleId> live_cav_ids() const;
  bool is_live(VehicleId id) const;
  const VehicleState* find(VehicleId id) const;
  const std::map<VehicleId, LaneRef>& hv_targets() const { return hv_targets_; }
  int step_index() const { return step_; }
  bool done() const { return done_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& reset_notes() const { return notes_; }

  int observation_size() const { return cfg_.observation.rows * kObservationFeatures; }
  int global_state_size() const { return observation_size() * cfg_.max_cavs; }

  void set_recording(bool on) { recording_ = on; }
  const EpisodeRecord& record() const { return record_; }

  // Replace the traffic with a hand-built scene (tests and scripted runs).
  void load_scene(std::vector<VehicleState> vehicles, std::uint64_t seed = 0);

 private:
  bool spawn(std::mt19937_64& rng, int n_cav, int n_hv);
  std::vector<VehicleState> with_barrier() const;
  void record_frame(double t);
  std::vector<std::pair<VehicleId, VehicleId>> detect_collisions() const;

  EnvConfig cfg_;
  RoadLayout layout_;
  VehicleState barrier_;
  std::vector<VehicleState> vehicles_;  // live vehicles
  std::map<VehicleId, VehicleState> last_state_;  // final state of removed CAVs
  std::vector<VehicleId> cav_ids_;      // every CAV spawned this episode
  std::map<VehicleId, LaneRef> hv_targets_;
  std::uint64_t seed_ = 0;
  int step_ = 0;
  bool done_ = true;
  bool recording_ = false;
  EpisodeRecord record_;
  std::vector<std::string> notes_;
};

}  // namespace mergesim

#endif  // MERGESIM_ENV_HPP_
