#ifndef MERGESIM_INTENT_HPP_
#define MERGESIM_INTENT_HPP_

#include <span>
#include <vector>

#include "mergesim/geometry.hpp"
#include "mergesim/hv_behavior.hpp"
#include "mergesim/vehicle.hpp"

namespace mergesim {

struct IntentSample {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double heading = 0.0;

  friend bool operator==(const IntentSample&, const IntentSample&) = default;
};

// Predicted poses at 1..horizon decision intervals ahead of created_at.
struct IntentTrajectory {
  VehicleId owner = 0;
  int created_at = 0;
  double length = 5.0;
  double width = 2.0;
  std::vector<IntentSample> samples;

  std::size_t horizon() const { return samples.size(); }
  friend bool operator==(const IntentTrajectory&, const IntentTrajectory&) = default;
};

struct RolloutSettings {
  ControllerGains gains{};
  TimingParams timing{};
  int horizon = 8;
};

// Rolls a held high-level action through the controllers and the bicycle
// model. Throws std::invalid_argument for non-CAV states.
IntentTrajectory generate_intent(const RoadLayout& layout, const VehicleState& state,
                                 HighLevelAction action, const RolloutSettings& settings,
                                 int created_at = 0);

// IDM + MOBIL rollout of one human driver against a frozen snapshot whose
// other members move straight at constant speed. `snapshot` may contain the
// HV itself; it is skipped.
IntentTrajectory predict_hv(const RoadLayout& layout, const VehicleState& hv,
                            LaneRef current_target, std::span<const VehicleState> snapshot,
                            const StyleParams& style, const RolloutSettings& settings,
                            int created_at = 0);

// Static or constant-speed extrapolation, used for obstacles.
IntentTrajectory hold_course(const VehicleState& v, const RolloutSettings& settings,
                             int created_at = 0);

IntentSample sample_of(const VehicleState& v);

}  // namespace mergesim

#endif  // MERGESIM_INTENT_HPP_
