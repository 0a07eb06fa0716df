#ifndef MERGESIM_SAFETY_HPP_
#define MERGESIM_SAFETY_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mergesim/geometry.hpp"
#include "mergesim/hv_behavior.hpp"
#include "mergesim/intent.hpp"
#include "mergesim/vehicle.hpp"

namespace mergesim {

struct SafetyParams {
  // Weights of the merging, merge-end and headway priority metrics.
  std::array<double, 3> alpha{1.0, 1.0, 0.5};
  double time_headway = 1.2;
  double headway_clamp = 5.0;
  double min_speed = 0.1;
  double noise_variance = 0.001;
  double conflict_inflation = 0.5;
  double perception_range = 150.0;

  friend bool operator==(const SafetyParams&, const SafetyParams&) = default;
};

struct PriorityEntry {
  VehicleId id = 0;
  double score = 0.0;
  double noise = 0.0;
};

struct PriorityList {
  std::vector<PriorityEntry> entries;  // descending by score
};

struct ConflictReport {
  VehicleId first = 0;
  VehicleId second = 0;
  int step = 0;               // first conflicting prediction step, 1-based
  double min_distance = 0.0;  // smallest center distance over the horizon
};

// Deterministic N(0, variance) draw keyed by (seed, step, agent).
double priority_noise(std::uint64_t seed, int step, VehicleId id, double variance);

// Bumper gap to the nearest same-lane vehicle ahead; +inf without a leader.
double headway_distance(const VehicleState& ego, std::span<const VehicleState> others);

// Time-headway metric: -log(d / (t_h v)) clamped to +-headway_clamp.
double headway_metric(double headway, double speed, const SafetyParams& p);

PriorityEntry priority_score(const RoadLayout& layout, const VehicleState& agent,
                             double headway, const SafetyParams& p, double noise);

struct NoiseKey {
  std::uint64_t seed = 0;
  int step = 0;
};

// One entry per CAV in `vehicles`, highest priority first.
PriorityList build_priority_list(const RoadLayout& layout, std::span<const VehicleState> vehicles,
                                 const SafetyParams& p, NoiseKey key);

// First time step at which the inflated footprints overlap. Throws
// std::invalid_argument when horizons differ.
std::optional<ConflictReport> trajectories_conflict(const IntentTrajectory& a,
                                                    const IntentTrajectory& b,
                                                    double inflation);

bool is_lane_change(const RoadLayout& layout, const VehicleState& ego, HighLevelAction action);

// Safety margin at prediction step k (1-based), measured as longitudinal
// clearance between footprints: centre offset minus both half-lengths,
// negative when they overlap. For lane changes it is the smallest clearance to any
// vehicle in the current or target lane; otherwise the clearance to the
// nearest leader (front bumper ahead of the ego's) in the ego's lane.
// Absent vehicles contribute +inf.
double safety_margin(const RoadLayout& layout, const VehicleState& ego, HighLevelAction action,
                     const IntentTrajectory& ego_intent,
                     std::span<const IntentTrajectory> neighbors, int k);

// Worst-case margin of an action's intent over the whole horizon.
double min_safety_margin(const RoadLayout& layout, const VehicleState& ego,
                         HighLevelAction action, const IntentTrajectory& ego_intent,
                         std::span<const IntentTrajectory> neighbors);

// Deterministic tie-break rank; lower ranks win ties.
int tie_break_rank(HighLevelAction a);

struct ActionAssessment {
  HighLevelAction action = HighLevelAction::Cruising;
  double min_margin = 0.0;
  bool conflict = false;
};

struct Correction {
  HighLevelAction action = HighLevelAction::SlowDown;
  bool resolved = true;  // false when every candidate still conflicts
  std::vector<ActionAssessment> assessed;
};

std::vector<HighLevelAction> available_actions(const RoadLayout& layout, const VehicleState& ego);

// Margin argmax over the candidate actions whose regenerated intent is
// conflict-free; if none is, over all candidates.
Correction correct_intention(const RoadLayout& layout, const VehicleState& ego,
                             std::span<const HighLevelAction> candidates,
                             std::span<const IntentTrajectory> neighbors,
                             const RolloutSettings& settings, const SafetyParams& p,
                             int created_at = 0);

struct SemContext {
  RolloutSettings rollout{};
  SafetyParams safety{};
  StyleTable styles{};
  NoiseKey noise{};
};

// What one ego saw when it was checked.
struct SemCheck {
  VehicleId ego = 0;
  std::vector<IntentTrajectory> hv_predictions;
  std::vector<VehicleId> cav_neighbors;
  bool had_conflict = false;
  bool corrected = false;
  bool resolved = true;
};

struct SemResult {
  std::map<VehicleId, HighLevelAction> actions;
  std::map<VehicleId, IntentTrajectory> intents;
  PriorityList priorities;
  std::vector<ConflictReport> conflicts;
  std::vector<SemCheck> checks;  // in priority order

  std::vector<VehicleId> corrected() const;
  std::vector<VehicleId> unresolved() const;
};

// Priority-ordered intent checking and correction. `vehicles` holds every
// live vehicle (CAVs, HVs, obstacles); `hv_targets` the lane each HV is
// currently steering to (defaults to its lane when absent). `intents` must
// hold one trajectory per CAV, generated from `proposed`.
SemResult run_sem(const RoadLayout& layout, std::span<const VehicleState> vehicles,
                  const std::map<VehicleId, LaneRef>& hv_targets,
                  const std::map<VehicleId, HighLevelAction>& proposed,
                  const std::map<VehicleId, IntentTrajectory>& intents, const SemContext& ctx);

}  // namespace mergesim

#endif  // MERGESIM_SAFETY_HPP_
