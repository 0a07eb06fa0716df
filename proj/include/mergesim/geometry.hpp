#ifndef MERGESIM_GEOMETRY_HPP_
#define MERGESIM_GEOMETRY_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "mergesim/types.hpp"

namespace mergesim {

struct LayoutParams {
  double through_length = 520.0;
  double merge_start = 320.0;
  double merge_length = 100.0;
  double ramp_approach_length = 220.0;
  double lane_width = 4.0;
  std::vector<double> coil_positions{325.0, 350.0, 375.0, 400.0, 425.0, 450.0};

  friend bool operator==(const LayoutParams&, const LayoutParams&) = default;
};

// One through lane (centerline y = 0) and one ramp lane running to its right
// (centerline y = -lane_width). The ramp lane is called Ramp upstream of
// merge_start and Merge alongside the through lane until merge_end, where a
// static barrier closes it.
class RoadLayout {
 public:
  double through_length() const { return p_.through_length; }
  double merge_start() const { return p_.merge_start; }
  double merge_length() const { return p_.merge_length; }
  double merge_end() const { return p_.merge_start + p_.merge_length; }
  double ramp_approach_length() const { return p_.ramp_approach_length; }
  double ramp_start() const { return p_.merge_start - p_.ramp_approach_length; }
  // Ramp approach plus merge lane; the normalizer of the merge-end metrics.
  double total_ramp_length() const {
    return p_.ramp_approach_length + p_.merge_length;
  }
  double lane_width() const { return p_.lane_width; }
  const std::vector<double>& coil_positions() const { return p_.coil_positions; }
  const LayoutParams& params() const { return p_; }

  double lane_center_y(LaneRef lane) const;
  bool lane_exists(LaneRef lane) const;

  // Lane containing the point, decided by which lateral half-slot it is in.
  LaneRef lane_at(double x, double y) const;

  // Neighbouring lanes at longitudinal position x; nullopt when absent.
  std::optional<LaneRef> left_of(LaneRef lane, double x) const;
  std::optional<LaneRef> right_of(LaneRef lane, double x) const;

  // Barrier terminating the merge lane, as a zero-speed obstacle.
  VehicleState end_barrier() const;

 private:
  friend RoadLayout build_layout(const LayoutParams& params);
  explicit RoadLayout(LayoutParams p) : p_(std::move(p)) {}

  LayoutParams p_;
};

// Throws std::invalid_argument on degenerate geometry or bad coil placement.
RoadLayout build_layout(const LayoutParams& params = {});

bool is_on_merge_lane(const RoadLayout& layout, const VehicleState& state);

// Distance travelled along the ramp lane, in [0, total_ramp_length].
// Throws std::invalid_argument for through-lane vehicles.
double ramp_progress(const RoadLayout& layout, const VehicleState& state);

bool same_lane_slot(LaneRef a, LaneRef b);

}  // namespace mergesim

#endif  // MERGESIM_GEOMETRY_HPP_
