#include "mergesim/hv_behavior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mergesim {

void validate(const IdmParams& p) {
  if (!(p.desired_speed > 0 && p.time_gap > 0 && p.jam_distance > 0 && p.max_accel > 0 &&
        p.comfort_decel > 0)) {
    throw std::invalid_argument("IDM parameters must be strictly positive");
  }
  if (!(p.exponent >= 1.0)) {
    throw std::invalid_argument("IDM exponent must be >= 1");
  }
}

void validate(const MobilParams& p) {
  if (!(p.gain_threshold >= 0.0)) {
    throw std::invalid_argument("MOBIL gain threshold must be non-negative");
  }
  if (!(p.safe_decel > 0.0)) {
    throw std::invalid_argument("MOBIL safe deceleration must be positive");
  }
  if (!(p.politeness >= 0.0 && p.politeness <= 1.0)) {
    throw std::invalid_argument("MOBIL politeness must lie in [0, 1]");
  }
}

double idm_accel(double ego_v, double gap, double closing_speed, const IdmParams& p) {
  if (!(gap > 0.0)) {
    throw std::domain_error("idm_accel: non-positive gap");
  }
  const double free_term = std::pow(std::max(ego_v, 0.0) / p.desired_speed, p.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double dynamic = ego_v * p.time_gap +
                           ego_v * closing_speed / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
    const double desired_gap = p.jam_distance + std::max(0.0, dynamic);
    interaction = (desired_gap / gap) * (desired_gap / gap);
  }
  const double a = p.max_accel * (1.0 - free_term - interaction);
  return std::clamp(a, kIdmMinAccel, p.max_accel);
}

double bumper_gap(const VehicleState& follower, const VehicleState& leader) {
  return leader.x - follower.x - 0.5 * (leader.length + follower.length);
}

std::optional<double> follow_accel(const VehicleState& follower,
                                   const std::optional<VehicleState>& leader,
                                   const IdmParams& p) {
  if (!leader) return idm_accel(follower.v, kNoLeaderGap, 0.0, p);
  const double gap = bumper_gap(follower, *leader);
  if (!(gap > 0.0)) return std::nullopt;
  return idm_accel(follower.v, gap, follower.v - leader->v, p);
}

bool mobil_decide(const VehicleState& ego, const MobilNeighbors& n, const IdmParams& idm,
                  const MobilParams& mobil) {
  const auto ego_new = follow_accel(ego, n.target_leader, idm);
  if (!ego_new) return false;
  const auto ego_old = follow_accel(ego, n.current_leader, idm);
  // Blocked by an overlap in the current lane: changing is maximally attractive.
  const double ego_gain = *ego_new - ego_old.value_or(kIdmMinAccel);

  double new_follower_gain = 0.0;
  if (n.target_follower) {
    const auto after = follow_accel(*n.target_follower, ego, idm);
    if (!after || *after < -mobil.safe_decel) return false;
    const auto before = follow_accel(*n.target_follower, n.target_leader, idm);
    new_follower_gain = *after - before.value_or(kIdmMinAccel);
  }

  double old_follower_gain = 0.0;
  if (n.current_follower) {
    const auto before = follow_accel(*n.current_follower, ego, idm);
    const auto after = follow_accel(*n.current_follower, n.current_leader, idm);
    old_follower_gain = after.value_or(kIdmMinAccel) - before.value_or(kIdmMinAccel);
  }

  const double incentive =
      ego_gain + mobil.politeness * (new_follower_gain + old_follower_gain);
  return incentive > mobil.gain_threshold;
}

StyleParams style_params(DrivingStyle style, const StyleTable& table) {
  switch (style) {
    case DrivingStyle::Aggressive: return table.aggressive;
    case DrivingStyle::Timid: return table.timid;
    case DrivingStyle::Normal: break;
  }
  return table.normal;
}

namespace {

bool in_slot(const VehicleState& v, bool through_slot) {
  return (v.lane.kind == LaneKind::Through) == through_slot;
}

}  // namespace

std::optional<VehicleState> find_leader(const VehicleState& ego,
                                        std::span<const VehicleState> others,
                                        bool through_slot) {
  const VehicleState* best = nullptr;
  for (const auto& o : others) {
    if (o.id == ego.id || !in_slot(o, through_slot) || !(o.x > ego.x)) continue;
    if (!best || o.x < best->x || (o.x == best->x && o.id < best->id)) best = &o;
  }
  if (!best) return std::nullopt;
  return *best;
}

std::optional<VehicleState> find_follower(const VehicleState& ego,
                                          std::span<const VehicleState> others,
                                          bool through_slot) {
  const VehicleState* best = nullptr;
  for (const auto& o : others) {
    if (o.id == ego.id || !in_slot(o, through_slot) || !(o.x <= ego.x)) continue;
    if (!best || o.x > best->x || (o.x == best->x && o.id < best->id)) best = &o;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace mergesim
