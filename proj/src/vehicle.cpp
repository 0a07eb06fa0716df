#include "mergesim/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mergesim {

namespace {

bool lanes_adjacent_or_equal(LaneRef from, LaneRef to) {
  if (same_lane_slot(from, to)) return true;
  // The through lane only borders the ramp lane along the merge section.
  return (from.kind == LaneKind::Through && to.kind == LaneKind::Merge) ||
         (from.kind == LaneKind::Merge && to.kind == LaneKind::Through);
}

double steering_command(const RoadLayout& layout, const VehicleState& s,
                        LaneRef target_lane, const ControllerGains& g) {
  const double lateral_error = layout.lane_center_y(target_lane) - s.y;
  const double lateral_speed_cmd = g.lateral_kp * lateral_error;
  const double heading_cmd = std::clamp(
      std::asin(std::clamp(lateral_speed_cmd / std::max(s.v, 1.0), -1.0, 1.0)),
      -kMaxSteer, kMaxSteer);
  return std::clamp(g.heading_kp * (heading_cmd - s.heading), -kMaxSteer, kMaxSteer);
}

}  // namespace

std::string_view to_string(HighLevelAction a) {
  switch (a) {
    case HighLevelAction::TurnLeft: return "turn_left";
    case HighLevelAction::TurnRight: return "turn_right";
    case HighLevelAction::Cruising: return "cruising";
    case HighLevelAction::SpeedUp: return "speed_up";
    case HighLevelAction::SlowDown: return "slow_down";
  }
  return "cruising";
}

HighLevelAction action_from_string(std::string_view s) {
  for (HighLevelAction a : kAllActions) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown action: " + std::string(s));
}

HighLevelAction action_from_index(int i) {
  if (i < 0 || i >= kNumActions) {
    throw std::out_of_range("action index out of range: " + std::to_string(i));
  }
  return static_cast<HighLevelAction>(i);
}

VehicleState step_bicycle(const VehicleState& state, ControlInput u, double dt) {
  const double a = std::clamp(u.acceleration, -kMaxAccel, kMaxAccel);
  const double delta = std::clamp(u.steering, -kMaxSteer, kMaxSteer);
  const double lr = 0.5 * state.length;
  // l_r / (l_f + l_r) = 1/2 with the axles at the half-lengths.
  const double beta = std::atan(0.5 * std::tan(delta));

  VehicleState next = state;
  next.x = state.x + state.v * std::cos(state.heading + beta) * dt;
  next.y = state.y + state.v * std::sin(state.heading + beta) * dt;
  next.heading = state.heading + (state.v / lr) * std::sin(beta) * dt;
  next.v = std::clamp(state.v + a * dt, 0.0, kMaxPhysicalSpeed);
  return next;
}

double pid_speed(double target_v, double current_v, const ControllerGains& gains) {
  return std::clamp(gains.speed_kp * (target_v - current_v), -kMaxAccel, kMaxAccel);
}

double steer_to_lane(const RoadLayout& layout, const VehicleState& state,
                     LaneRef target_lane, const ControllerGains& gains) {
  if (!layout.lane_exists(target_lane) || !lanes_adjacent_or_equal(state.lane, target_lane)) {
    throw std::invalid_argument("steer_to_lane: target lane not reachable from " +
                                std::string(to_string(state.lane.kind)));
  }
  return steering_command(layout, state, target_lane, gains);
}

bool action_available(const RoadLayout& layout, const VehicleState& state,
                      HighLevelAction action) {
  switch (action) {
    case HighLevelAction::TurnLeft: return layout.left_of(state.lane, state.x).has_value();
    case HighLevelAction::TurnRight: return layout.right_of(state.lane, state.x).has_value();
    default: return true;
  }
}

ActionTarget execute_action(const RoadLayout& layout, const VehicleState& state,
                            HighLevelAction action, const ControllerGains& gains) {
  ActionTarget out;
  out.target_lane = state.lane;
  double v = state.v;
  switch (action) {
    case HighLevelAction::SpeedUp: v += gains.speed_step; break;
    case HighLevelAction::SlowDown: v -= gains.speed_step; break;
    case HighLevelAction::Cruising: break;
    case HighLevelAction::TurnLeft:
    case HighLevelAction::TurnRight: {
      const auto lane = action == HighLevelAction::TurnLeft
                            ? layout.left_of(state.lane, state.x)
                            : layout.right_of(state.lane, state.x);
      if (lane) {
        out.target_lane = *lane;
      } else {
        out.masked = true;
      }
      break;
    }
  }
  out.target_v = std::clamp(v, gains.min_target_speed, gains.max_target_speed);
  return out;
}

VehicleState drive_substep(const RoadLayout& layout, const VehicleState& state,
                           double acceleration, LaneRef target_lane,
                           const ControllerGains& gains, double dt) {
  ControlInput u;
  u.acceleration = acceleration;
  u.steering = steering_command(layout, state, target_lane, gains);
  VehicleState next = step_bicycle(state, u, dt);
  next.lane = layout.lane_at(next.x, next.y);
  return next;
}

VehicleState track_target(const RoadLayout& layout, const VehicleState& state,
                          const ActionTarget& target, const ControllerGains& gains,
                          double dt) {
  return drive_substep(layout, state, pid_speed(target.target_v, state.v, gains),
                       target.target_lane, gains, dt);
}

}  // namespace mergesim
