#ifndef MERGESIM_VEHICLE_HPP_
#define MERGESIM_VEHICLE_HPP_

#include <array>
#include <string_view>

#include "mergesim/geometry.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

struct ControlInput {
  double acceleration = 0.0;
  double steering = 0.0;
};

inline constexpr double kMaxAccel = 5.0;
inline constexpr double kMaxSteer = 0.78539816339744830962;  // pi/4

enum class HighLevelAction : int {
  TurnLeft = 0,
  TurnRight = 1,
  Cruising = 2,
  SpeedUp = 3,
  SlowDown = 4,
};

inline constexpr int kNumActions = 5;
inline constexpr std::array<HighLevelAction, kNumActions> kAllActions{
    HighLevelAction::TurnLeft, HighLevelAction::TurnRight, HighLevelAction::Cruising,
    HighLevelAction::SpeedUp, HighLevelAction::SlowDown};

std::string_view to_string(HighLevelAction a);
HighLevelAction action_from_string(std::string_view s);
HighLevelAction action_from_index(int i);
inline int to_index(HighLevelAction a) { return static_cast<int>(a); }

struct ControllerGains {
  double speed_kp = 0.5;
  double lateral_kp = 0.6;
  double heading_kp = 2.0;
  double speed_step = 5.0;   // target-speed change for SpeedUp/SlowDown
  double min_target_speed = 10.0;
  double max_target_speed = 30.0;

  friend bool operator==(const ControllerGains&, const ControllerGains&) = default;
};

struct TimingParams {
  double dt = 0.1;
  int substeps_per_decision = 10;

  double decision_interval() const { return dt * substeps_per_decision; }
  friend bool operator==(const TimingParams&, const TimingParams&) = default;
};

// Kinematic bicycle with l_f = l_r = length / 2. Inputs are clamped.
VehicleState step_bicycle(const VehicleState& state, ControlInput u, double dt);

// Proportional speed tracking, clamped to the actuator limit.
double pid_speed(double target_v, double current_v, const ControllerGains& gains);

// Lateral cascade: position error -> lateral speed -> heading -> steering.
// Throws std::invalid_argument when the target lane is missing or not
// adjacent to the current lane.
double steer_to_lane(const RoadLayout& layout, const VehicleState& state,
                     LaneRef target_lane, const ControllerGains& gains);

struct ActionTarget {
  double target_v = 0.0;
  LaneRef target_lane{};
  bool masked = false;  // lane change impossible here; executed as Cruising
};

ActionTarget execute_action(const RoadLayout& layout, const VehicleState& state,
                            HighLevelAction action, const ControllerGains& gains);

bool action_available(const RoadLayout& layout, const VehicleState& state,
                      HighLevelAction action);

// One bicycle substep under a given longitudinal acceleration while steering
// toward target_lane; lane affiliation is refreshed from the new pose.
VehicleState drive_substep(const RoadLayout& layout, const VehicleState& state,
                           double acceleration, LaneRef target_lane,
                           const ControllerGains& gains, double dt);

// drive_substep with the speed controller tracking target.target_v.
VehicleState track_target(const RoadLayout& layout, const VehicleState& state,
                          const ActionTarget& target, const ControllerGains& gains,
                          double dt);

}  // namespace mergesim

#endif  // MERGESIM_VEHICLE_HPP_
