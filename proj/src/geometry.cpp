#include "mergesim/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mergesim {

namespace {

// Closed-lane block past the merge end. Longer than one decision interval of
// travel at top speed so sampled intents cannot step over it.
constexpr double kBarrierLength = 40.0;
// Vehicle-wide rather than lane-wide, so a merge that has mostly reached
// the through lane does not register as a conflict with it.
constexpr double kBarrierWidth = 2.0;

bool is_ramp_slot(LaneKind kind) {
  return kind == LaneKind::Ramp || kind == LaneKind::Merge;
}

}  // namespace

std::string_view to_string(LaneKind kind) {
  switch (kind) {
    case LaneKind::Through: return "through";
    case LaneKind::Ramp: return "ramp";
    case LaneKind::Merge: return "merge";
  }
  return "through";
}

std::string_view to_string(VehicleKind kind) {
  switch (kind) {
    case VehicleKind::CAV: return "cav";
    case VehicleKind::HV: return "hv";
    case VehicleKind::Obstacle: return "obstacle";
  }
  return "cav";
}

std::string_view to_string(DrivingStyle style) {
  switch (style) {
    case DrivingStyle::Aggressive: return "aggressive";
    case DrivingStyle::Normal: return "normal";
    case DrivingStyle::Timid: return "timid";
  }
  return "normal";
}

LaneKind lane_kind_from_string(std::string_view s) {
  if (s == "through") return LaneKind::Through;
  if (s == "ramp") return LaneKind::Ramp;
  if (s == "merge") return LaneKind::Merge;
  throw std::invalid_argument("unknown lane kind: " + std::string(s));
}

VehicleKind vehicle_kind_from_string(std::string_view s) {
  if (s == "cav") return VehicleKind::CAV;
  if (s == "hv") return VehicleKind::HV;
  if (s == "obstacle") return VehicleKind::Obstacle;
  throw std::invalid_argument("unknown vehicle kind: " + std::string(s));
}

DrivingStyle driving_style_from_string(std::string_view s) {
  if (s == "aggressive") return DrivingStyle::Aggressive;
  if (s == "normal") return DrivingStyle::Normal;
  if (s == "timid") return DrivingStyle::Timid;
  throw std::invalid_argument("unknown driving style: " + std::string(s));
}

RoadLayout build_layout(const LayoutParams& p) {
  if (!(p.through_length > 0.0)) {
    throw std::invalid_argument("layout: through_length must be positive");
  }
  if (!(p.merge_length > 0.0)) {
    throw std::invalid_argument("layout: merge_length must be positive");
  }
  if (!(p.lane_width > 0.0)) {
    throw std::invalid_argument("layout: lane_width must be positive");
  }
  if (!(p.ramp_approach_length > 0.0)) {
    throw std::invalid_argument("layout: ramp_approach_length must be positive");
  }
  if (!(p.merge_start >= 0.0)) {
    throw std::invalid_argument("layout: merge_start must be non-negative");
  }
  if (p.merge_start + p.merge_length > p.through_length) {
    throw std::invalid_argument("layout: merge lane extends past the through lane");
  }
  for (std::size_t i = 0; i < p.coil_positions.size(); ++i) {
    const double c = p.coil_positions[i];
    if (c < 0.0 || c > p.through_length) {
      throw std::invalid_argument("layout: coil outside road extent");
    }
    if (i > 0 && !(c > p.coil_positions[i - 1])) {
      throw std::invalid_argument("layout: coil positions must be strictly increasing");
    }
  }
  return RoadLayout(p);
}

double RoadLayout::lane_center_y(LaneRef lane) const {
  return lane.kind == LaneKind::Through ? 0.0 : -p_.lane_width;
}

bool RoadLayout::lane_exists(LaneRef lane) const { return lane.index == 0; }

LaneRef RoadLayout::lane_at(double x, double y) const {
  if (y > -0.5 * p_.lane_width) return {LaneKind::Through, 0};
  return {x < p_.merge_start ? LaneKind::Ramp : LaneKind::Merge, 0};
}

std::optional<LaneRef> RoadLayout::left_of(LaneRef lane, double x) const {
  if (!lane_exists(lane)) return std::nullopt;
  if (is_ramp_slot(lane.kind) && x >= p_.merge_start && x <= merge_end()) {
    return LaneRef{LaneKind::Through, 0};
  }
  return std::nullopt;
}

std::optional<LaneRef> RoadLayout::right_of(LaneRef lane, double x) const {
  if (!lane_exists(lane)) return std::nullopt;
  if (lane.kind == LaneKind::Through && x >= p_.merge_start && x <= merge_end()) {
    return LaneRef{LaneKind::Merge, 0};
  }
  return std::nullopt;
}

VehicleState RoadLayout::end_barrier() const {
  VehicleState b;
  b.id = -1;
  b.kind = VehicleKind::Obstacle;
  b.x = merge_end() + 0.5 * kBarrierLength;
  b.y = -p_.lane_width;
  b.v = 0.0;
  b.length = kBarrierLength;
  b.width = kBarrierWidth;
  b.lane = {LaneKind::Merge, 0};
  return b;
}

bool is_on_merge_lane(const RoadLayout&, const VehicleState& state) {
  return is_ramp_slot(state.lane.kind);
}

double ramp_progress(const RoadLayout& layout, const VehicleState& state) {
  if (!is_ramp_slot(state.lane.kind)) {
    throw std::invalid_argument("ramp_progress: vehicle is on the through lane");
  }
  return std::clamp(state.x - layout.ramp_start(), 0.0, layout.total_ramp_length());
}

bool same_lane_slot(LaneRef a, LaneRef b) {
  return (a.kind == LaneKind::Through) == (b.kind == LaneKind::Through);
}

}  // namespace mergesim
