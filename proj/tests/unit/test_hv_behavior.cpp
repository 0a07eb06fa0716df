#include <stdexcept>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "mergesim/hv_behavior.hpp"

using namespace mergesim;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

VehicleState car(VehicleId id, double x, double v, LaneKind kind = LaneKind::Through) {
  VehicleState s;
  s.id = id;
  s.x = x;
  s.y = kind == LaneKind::Through ? 0.0 : -4.0;
  s.v = v;
  s.lane = {kind, 0};
  s.kind = VehicleKind::HV;
  return s;
}

// Direct transcription of the car-following law.
double idm_reference(double v, double s, double dv, double v0, double T, double s0, double a, double b,
                     double delta) {
  const double star = s0 + std::max(0.0, v * T + v * dv / (2.0 * std::sqrt(a * b)));
  const double interaction = std::isinf(s) ? 0.0 : (star / s) * (star / s);
  return std::clamp(a * (1.0 - std::pow(v / v0, delta) - interaction), -10.0, a);
}

}  // namespace

TEST_CASE("IDM equilibrium and start from rest") {
  const IdmParams p;
  CHECK(idm_accel(p.desired_speed, kInf, 0.0, p) == doctest::Approx(0.0));
  CHECK(idm_accel(0.0, kInf, 0.0, p) == p.max_accel);
}

TEST_CASE("IDM matches a scalar evaluation") {
  const IdmParams p;
  const double expect = idm_reference(20, 30, 5, 25, 1.5, 5, 3, 5, 4);
  CHECK(idm_accel(20.0, 30.0, 5.0, p) == doctest::Approx(expect).epsilon(1e-14));
  // Hand value: s* = 5 + 30 + 100/(2 sqrt 15) = 47.9099..., a = 3 (1 - 0.4096 - (s*/30)^2).
  const double star = 35.0 + 100.0 / (2.0 * std::sqrt(15.0));
  CHECK(idm_accel(20.0, 30.0, 5.0, p) == doctest::Approx(std::max(-10.0, 3.0 * (1 - 0.4096 - star * star / 900.0))));
}

TEST_CASE("IDM rejects overlapping pairs") {
  CHECK_THROWS_AS(idm_accel(10.0, 0.0, 0.0, IdmParams{}), std::domain_error);
  CHECK_THROWS_AS(idm_accel(10.0, -1.0, 0.0, IdmParams{}), std::domain_error);
}

TEST_CASE("IDM monotonicity in speed and gap") {
  const IdmParams p;
  for (double s : {8.0, 20.0, 60.0, kInf}) {
    double prev = kInf;
    for (double v = 0.0; v <= 35.0; v += 0.5) {
      const double a = idm_accel(v, s, 0.0, p);
      CHECK(a <= prev + 1e-12);
      prev = a;
    }
  }
  for (double v : {0.0, 10.0, 25.0}) {
    double prev = -kInf;
    for (double s = 1.0; s <= 200.0; s += 1.0) {
      const double a = idm_accel(v, s, 2.0, p);
      CHECK(a >= prev - 1e-12);
      prev = a;
    }
  }
}

TEST_CASE("MOBIL: empty road never changes") {
  CHECK_FALSE(mobil_decide(car(0, 100, 25), {}, IdmParams{}, MobilParams{}));
}

TEST_CASE("MOBIL: blocked by a stopped leader with an empty target lane changes") {
  const IdmParams idm;
  const MobilParams mobil;
  MobilNeighbors n;
  n.current_leader = car(1, 120, 0);
  const VehicleState ego = car(0, 100, 20);
  const double gain = idm_reference(20, kInf, 0, 25, 1.5, 5, 3, 5, 4) -
                      idm_reference(20, 120 - 100 - 5, 20, 25, 1.5, 5, 3, 5, 4);
  CHECK(gain > mobil.gain_threshold);
  CHECK(mobil_decide(ego, n, idm, mobil));
}

TEST_CASE("MOBIL: a close fast target-lane follower vetoes the change") {
  const IdmParams idm;
  const MobilParams mobil;
  MobilNeighbors n;
  n.current_leader = car(1, 120, 0);
  n.target_follower = car(2, 93, 28, LaneKind::Merge);  // bumper gap 2 m
  const double braking = idm_reference(28, 2.0, 28 - 20, 25, 1.5, 5, 3, 5, 4);
  CHECK(braking < -mobil.safe_decel);
  CHECK_FALSE(mobil_decide(car(0, 100, 20), n, idm, mobil));
}

TEST_CASE("MOBIL ignores neighbours far beyond perception") {
  const IdmParams idm;
  const MobilParams mobil;
  MobilNeighbors near;
  near.current_leader = car(1, 130, 5);
  MobilNeighbors far = near;
  far.target_leader = car(2, 100 + 1e7, 25, LaneKind::Merge);
  far.target_follower = car(3, 100 - 1e7, 25, LaneKind::Merge);
  const VehicleState ego = car(0, 100, 20);
  CHECK(mobil_decide(ego, near, idm, mobil) == mobil_decide(ego, far, idm, mobil));
}

TEST_CASE("style table ordering") {
  const StyleParams normal = style_params(DrivingStyle::Normal);
  CHECK(normal.idm.max_accel == 3.0);
  CHECK(normal.idm.time_gap == 1.5);
  CHECK(normal.mobil.gain_threshold == 0.2);
  CHECK(normal == StyleParams{});
  const StyleParams ag = style_params(DrivingStyle::Aggressive);
  CHECK(ag.idm.max_accel > normal.idm.max_accel);
  CHECK(ag.idm.desired_speed > normal.idm.desired_speed);
  CHECK(ag.idm.time_gap < normal.idm.time_gap);
  const StyleParams timid = style_params(DrivingStyle::Timid);
  CHECK(timid.mobil.safe_decel < normal.mobil.safe_decel);
  CHECK(timid.idm.time_gap > normal.idm.time_gap);
}

TEST_CASE("every style stays within its acceleration bounds") {
  for (auto style : {DrivingStyle::Aggressive, DrivingStyle::Normal, DrivingStyle::Timid}) {
    const IdmParams p = style_params(style).idm;
    for (double v = 0; v <= 45; v += 3) {
      for (double s : {0.5, 3.0, 20.0, kInf}) {
        for (double dv : {-10.0, 0.0, 15.0}) {
          const double a = idm_accel(v, s, std::isinf(s) ? 0.0 : dv, p);
          CHECK(a >= -10.0);
          CHECK(a <= p.max_accel);
        }
      }
    }
  }
}

TEST_CASE("leader and follower lookup by lane slot") {
  const VehicleState ego = car(0, 100, 20);
  const VehicleState others[] = {car(1, 150, 20), car(2, 120, 20, LaneKind::Merge), car(3, 130, 20),
                                 car(4, 80, 20), car(5, 90, 20, LaneKind::Merge)};
  CHECK(find_leader(ego, others, true)->id == 3);
  CHECK(find_leader(ego, others, false)->id == 2);
  CHECK(find_follower(ego, others, true)->id == 4);
  CHECK(find_follower(ego, others, false)->id == 5);
}
