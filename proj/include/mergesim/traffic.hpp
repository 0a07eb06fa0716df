#ifndef MERGESIM_TRAFFIC_HPP_
#define MERGESIM_TRAFFIC_HPP_

#include <span>

#include "mergesim/geometry.hpp"
#include "mergesim/hv_behavior.hpp"
#include "mergesim/vehicle.hpp"

namespace mergesim {

// Lateral settling tolerance before an HV may consider another lane change.
inline constexpr double kLaneSettledTolerance = 0.25;

bool is_lane_settled(const RoadLayout& layout, const VehicleState& v, LaneRef target);

// Lane-change decision for a human driver, taken once per decision interval.
// Keeps `current_target` while a change is still in progress.
LaneRef hv_choose_lane(const RoadLayout& layout, const VehicleState& hv,
                       LaneRef current_target, std::span<const VehicleState> others,
                       const StyleParams& style);

// Longitudinal IDM command; while changing lanes the stricter of the two
// lanes' leaders governs.
double hv_accel(const VehicleState& hv, LaneRef target_lane,
                std::span<const VehicleState> others, const IdmParams& idm);

}  // namespace mergesim

#endif  // MERGESIM_TRAFFIC_HPP_
