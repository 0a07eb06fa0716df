#include "mergesim/collision.hpp"

#include <array>
#include <cmath>

namespace mergesim {

namespace {

struct Axis {
  double x;
  double y;
};

// Half-extent of box `b` projected onto unit axis `ax`.
double projected_radius(const OrientedBox& b, Axis ax) {
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  return 0.5 * b.length * std::abs(c * ax.x + s * ax.y) +
         0.5 * b.width * std::abs(-s * ax.x + c * ax.y);
}

}  // namespace

OrientedBox footprint(const VehicleState& v, double inflation) {
  return {v.x, v.y, v.heading, v.length + 2.0 * inflation, v.width + 2.0 * inflation};
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const double dx = b.cx - a.cx;
  const double dy = b.cy - a.cy;
  const std::array<Axis, 4> axes{{
      {std::cos(a.heading), std::sin(a.heading)},
      {-std::sin(a.heading), std::cos(a.heading)},
      {std::cos(b.heading), std::sin(b.heading)},
      {-std::sin(b.heading), std::cos(b.heading)},
  }};
  for (const Axis ax : axes) {
    const double distance = std::abs(dx * ax.x + dy * ax.y);
    if (distance > projected_radius(a, ax) + projected_radius(b, ax)) return false;
  }
  return true;
}

}  // namespace mergesim
