#ifndef MERGESIM_TYPES_HPP_
#define MERGESIM_TYPES_HPP_

#include <cstdint>
#include <string_view>

namespace mergesim {

using VehicleId = int;

enum class LaneKind : std::uint8_t { Through, Ramp, Merge };

struct LaneRef {
  LaneKind kind = LaneKind::Through;
  int index = 0;

  friend bool operator==(const LaneRef&, const LaneRef&) = default;
};

enum class VehicleKind : std::uint8_t { CAV, HV, Obstacle };

enum class DrivingStyle : std::uint8_t { Aggressive, Normal, Timid };

// Road-aligned state: x is lane arclength along the through lane, y is the
// signed lateral offset from the through-lane centerline (positive = left).
struct VehicleState {
  VehicleId id = 0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double heading = 0.0;
  LaneRef lane{};
  double length = 5.0;
  double width = 2.0;
  VehicleKind kind = VehicleKind::CAV;
  DrivingStyle style = DrivingStyle::Normal;
};

inline constexpr double kMaxPhysicalSpeed = 45.0;

std::string_view to_string(LaneKind kind);
std::string_view to_string(VehicleKind kind);
std::string_view to_string(DrivingStyle style);
LaneKind lane_kind_from_string(std::string_view s);
VehicleKind vehicle_kind_from_string(std::string_view s);
DrivingStyle driving_style_from_string(std::string_view s);

}  // namespace mergesim

#endif  // MERGESIM_TYPES_HPP_
