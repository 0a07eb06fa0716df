#ifndef MERGESIM_TESTS_ORACLES_HPP_
#define MERGESIM_TESTS_ORACLES_HPP_

#include <array>
#include <optional>
#include <vector>

#include "mergesim/geometry.hpp"
#include "mergesim/intent.hpp"

// Reference computations written independently of the library internals.
namespace oracle {

using namespace mergesim;

struct Point {
  double x;
  double y;
};
using Quad = std::array<Point, 4>;

// Corners of a length x width rectangle centred at (x, y) with heading h,
// grown by `inflation` on every side.
Quad rectangle(double x, double y, double h, double length, double width, double inflation);

// Convex quadrilateral intersection by corner containment and edge
// crossing; touching counts as overlap.
bool quads_overlap(const Quad& a, const Quad& b);

// First 1-based step at which the inflated footprints overlap.
std::optional<int> first_conflict(const IntentTrajectory& a, const IntentTrajectory& b, double inflation);

bool lane_change_possible(const RoadLayout& layout, const VehicleState& ego, HighLevelAction a);

double margin_at(const RoadLayout& layout, const VehicleState& ego, HighLevelAction a,
                 const IntentTrajectory& ego_intent, const std::vector<IntentTrajectory>& neighbours, int k);

struct Choice {
  HighLevelAction action;
  bool any_conflict_free;
};

// Exhaustive evaluation of every possible action: restrict to conflict-free
// actions when one exists, maximise the worst-step margin, break ties by
// SlowDown, Cruising, SpeedUp, TurnRight, TurnLeft.
Choice best_action(const RoadLayout& layout, const VehicleState& ego,
                   const std::vector<IntentTrajectory>& neighbours, const RolloutSettings& rollout,
                   double inflation);

// A_t = sum_l (gamma lambda)^l delta_{t+l}, cut after the first done.
std::vector<double> gae_nested(const std::vector<double>& r, const std::vector<double>& v,
                               const std::vector<int>& done, double bootstrap, double gamma, double lambda);

}  // namespace oracle

#endif
