#include "mergesim/traffic.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

bool is_lane_settled(const RoadLayout& layout, const VehicleState& v, LaneRef target) {
  return same_lane_slot(v.lane, target) &&
         std::abs(v.y - layout.lane_center_y(target)) < kLaneSettledTolerance;
}

LaneRef hv_choose_lane(const RoadLayout& layout, const VehicleState& hv,
                       LaneRef current_target, std::span<const VehicleState> others,
                       const StyleParams& style) {
  if (!is_lane_settled(layout, hv, current_target)) return current_target;
  const bool through = hv.lane.kind == LaneKind::Through;
  for (const auto& candidate : {layout.left_of(hv.lane, hv.x), layout.right_of(hv.lane, hv.x)}) {
    if (!candidate) continue;
    const bool target_through = candidate->kind == LaneKind::Through;
    MobilNeighbors n;
    n.current_leader = find_leader(hv, others, through);
    n.current_follower = find_follower(hv, others, through);
    n.target_leader = find_leader(hv, others, target_through);
    n.target_follower = find_follower(hv, others, target_through);
    if (mobil_decide(hv, n, style.idm, style.mobil)) return *candidate;
  }
  return hv.lane;
}

double hv_accel(const VehicleState& hv, LaneRef target_lane,
                std::span<const VehicleState> others, const IdmParams& idm) {
  const bool through = hv.lane.kind == LaneKind::Through;
  double a = follow_accel(hv, find_leader(hv, others, through), idm).value_or(kIdmMinAccel);
  const bool target_through = target_lane.kind == LaneKind::Through;
  if (target_through != through) {
    a = std::min(a, follow_accel(hv, find_leader(hv, others, target_through), idm)
                        .value_or(kIdmMinAccel));
  }
  return a;
}

}  // namespace mergesim
