#ifndef MERGESIM_COLLISION_HPP_
#define MERGESIM_COLLISION_HPP_

#include "mergesim/types.hpp"

namespace mergesim {

struct OrientedBox {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;
};

// Footprint grown by `inflation` on every side.
OrientedBox footprint(const VehicleState& v, double inflation = 0.0);

// Separating-axis test on the four edge normals. Touching boxes overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

}  // namespace mergesim

#endif  // MERGESIM_COLLISION_HPP_
