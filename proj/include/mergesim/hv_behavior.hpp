#ifndef MERGESIM_HV_BEHAVIOR_HPP_
#define MERGESIM_HV_BEHAVIOR_HPP_

#include <limits>
#include <optional>
#include <span>

#include "mergesim/types.hpp"

namespace mergesim {

struct IdmParams {
  double desired_speed = 25.0;
  double time_gap = 1.5;
  double jam_distance = 5.0;
  double max_accel = 3.0;
  double comfort_decel = 5.0;
  double exponent = 4.0;

  friend bool operator==(const IdmParams&, const IdmParams&) = default;
};

struct MobilParams {
  double politeness = 0.0;
  double gain_threshold = 0.2;
  double safe_decel = 2.0;

  friend bool operator==(const MobilParams&, const MobilParams&) = default;
};

struct StyleParams {
  IdmParams idm;
  MobilParams mobil;

  friend bool operator==(const StyleParams&, const StyleParams&) = default;
};

struct StyleTable {
  StyleParams aggressive{{30.0, 1.0, 5.0, 4.0, 5.0, 4.0}, {0.0, 0.1, 2.0}};
  StyleParams normal{};
  StyleParams timid{{20.0, 2.0, 5.0, 2.0, 5.0, 4.0}, {0.0, 0.4, 1.5}};

  friend bool operator==(const StyleTable&, const StyleTable&) = default;
};

inline constexpr double kNoLeaderGap = std::numeric_limits<double>::infinity();
inline constexpr double kIdmMinAccel = -10.0;

void validate(const IdmParams& p);
void validate(const MobilParams& p);

// IDM acceleration. gap is bumper-to-bumper; closing_speed = v_ego - v_leader.
// A free road is gap = +inf, closing_speed = 0. Throws std::domain_error for
// gap <= 0, which is an overlap rather than a car-following situation.
double idm_accel(double ego_v, double gap, double closing_speed, const IdmParams& p);

// Bumper-to-bumper gap from follower to leader along x.
double bumper_gap(const VehicleState& follower, const VehicleState& leader);

// IDM acceleration of `follower` behind optional `leader`; nullopt if the two
// already overlap longitudinally.
std::optional<double> follow_accel(const VehicleState& follower,
                                   const std::optional<VehicleState>& leader,
                                   const IdmParams& p);

struct MobilNeighbors {
  std::optional<VehicleState> current_leader;
  std::optional<VehicleState> current_follower;
  std::optional<VehicleState> target_leader;
  std::optional<VehicleState> target_follower;
};

bool mobil_decide(const VehicleState& ego, const MobilNeighbors& n, const IdmParams& idm,
                  const MobilParams& mobil);

StyleParams style_params(DrivingStyle style, const StyleTable& table = {});

// Nearest vehicle strictly ahead of / behind `ego` (by x) among `others`
// whose lane slot matches `through_slot`. Ego's own id is skipped.
std::optional<VehicleState> find_leader(const VehicleState& ego,
                                        std::span<const VehicleState> others,
                                        bool through_slot);
std::optional<VehicleState> find_follower(const VehicleState& ego,
                                          std::span<const VehicleState> others,
                                          bool through_slot);

}  // namespace mergesim

#endif  // MERGESIM_HV_BEHAVIOR_HPP_
