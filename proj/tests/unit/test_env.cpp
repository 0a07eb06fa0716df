#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mergesim/env.hpp"

using namespace mergesim;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

VehicleState make(VehicleId id, double x, double y, double v, VehicleKind kind = VehicleKind::CAV) {
  VehicleState s;
  s.id = id;
  s.x = x;
  s.y = y;
  s.v = v;
  s.kind = kind;
  return s;
}

double reward_by_hand(double v, bool hit) {
  const double rc = hit ? -1.0 : 0.0;
  const double rs = std::min((v - 10.0) / 20.0, 1.0);
  return 200.0 * rc + 1.0 * rs;
}

struct CrashCounts {
  int episodes_with_crash = 0;
  int barrier = 0;
};

// Uniformly random CAV actions over a fixed set of Easy episodes.
CrashCounts random_policy_crashes(bool sem) {
  EnvConfig cfg;
  cfg.sem_enabled = sem;
  MergingEnv env(cfg);
  std::mt19937_64 rng(5);
  CrashCounts c;
  for (int e = 0; e < 150; ++e) {
    env.reset(static_cast<std::uint64_t>(e));
    while (!env.done()) {
      std::map<VehicleId, HighLevelAction> a;
      for (VehicleId id : env.live_cav_ids()) a[id] = action_from_index(static_cast<int>(rng() % kNumActions));
      const auto out = env.step(a);
      c.episodes_with_crash += out.info.collisions.empty() ? 0 : 1;
      for (const auto& [x, y] : out.info.collisions) c.barrier += (x < 0 || y < 0) ? 1 : 0;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("reward examples") {
  const RoadLayout layout = build_layout();
  const RewardParams p;
  const auto r = compute_reward(layout, p, make(1, 100, 0, 20), kInf, false);
  CHECK(r.total == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.headway == 0.0);
  CHECK(r.merging == 0.0);
  const auto hit = compute_reward(layout, p, make(1, 100, 0, 25), kInf, true);
  CHECK(std::fabs(hit.total - (-199.25)) < 1e-12);
  CHECK(std::fabs(hit.total - reward_by_hand(25, true)) < 1e-12);
  const auto at_threshold = compute_reward(layout, p, make(1, 100, 0, 20), 1.2 * 20, false);
  CHECK(std::fabs(at_threshold.headway) < 1e-15);
}

TEST_CASE("merging cost peaks at the end of the ramp") {
  VehicleState v = make(1, 0, -4, 20);
  v.lane = {LaneKind::Merge, 0};
  const RoadLayout layout = build_layout();
  v.x = layout.merge_end();
  const auto end = compute_reward(layout, RewardParams{}, v, kInf, false);
  CHECK(end.merging == doctest::Approx(-1.0));
  v.x = layout.merge_start();
  const auto start = compute_reward(layout, RewardParams{}, v, kInf, false);
  const double len = layout.total_ramp_length();
  const double x = layout.ramp_approach_length();
  CHECK(start.merging == doctest::Approx(-std::exp(-(x - len) * (x - len) / (10 * len))));
}

TEST_CASE("reward terms sum to the total and stay within bounds") {
  const RoadLayout layout = build_layout();
  const RewardParams p;
  for (double v = 0; v <= 45; v += 2.5) {
    for (double h : {0.5, 10.0, 80.0, kInf}) {
      for (bool hit : {false, true}) {
        for (double y : {0.0, -4.0}) {
          VehicleState s = make(1, 380, y, v);
          s.lane = layout.lane_at(s.x, y);
          const auto r = compute_reward(layout, p, s, h, hit);
          const double sum = 200 * r.collision + r.speed + 4 * r.headway + 4 * r.merging;
          CHECK(std::fabs(sum - r.total) < 1e-12);
          CHECK(r.speed >= -0.5);
          CHECK(r.speed <= 1.0);
          CHECK(r.total >= -200 - 4 * 5 - 4);
          CHECK(r.total <= 1 + 4 * 5);
        }
      }
    }
  }
}

TEST_CASE("observation padding, range and normalisation") {
  EnvConfig cfg;
  MergingEnv env(cfg);
  env.load_scene({make(1, 50, 0, 25)});
  const auto lone = env.observe(1);
  CHECK(lone.at(0, 0) == 1.0);
  for (int r = 1; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) CHECK(lone.at(r, c) == 0.0);
  }
  env.load_scene({make(1, 50, 0, 25), make(2, 201, 0, 25, VehicleKind::HV)});
  CHECK(env.observe(1).at(1, 0) == 0.0);
  env.load_scene({make(1, 50, 0, 25), make(2, 100, -4, 25, VehicleKind::HV)});
  const auto o = env.observe(1);
  CHECK(o.at(1, 0) == 1.0);
  CHECK(o.at(1, 1) == doctest::Approx(0.5));
  CHECK(o.at(1, 2) == doctest::Approx(-4.0 / 100.0));
  CHECK(o.at(1, 3) == 0.0);
  CHECK(o.at(1, 4) == 0.0);
}

TEST_CASE("global state puts the ego first and pads to the maximum agent count") {
  EnvConfig cfg;
  MergingEnv env(cfg);
  env.load_scene({make(1, 50, 0, 25), make(2, 80, 0, 20), make(3, 70, -4, 22, VehicleKind::HV)});
  const auto g = env.global_state(2);
  CHECK(static_cast<int>(g.size()) == env.global_state_size());
  const auto o2 = env.observe(2);
  const auto o1 = env.observe(1);
  for (int i = 0; i < 25; ++i) {
    CHECK(g[i] == o2.data[i]);
    CHECK(g[25 + i] == o1.data[i]);
  }
  for (std::size_t i = 50; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("spawn counts, speeds and spacing") {
  for (auto level : {TrafficLevel::Easy, TrafficLevel::Hard}) {
    EnvConfig cfg;
    cfg.mode.level = level;
    MergingEnv env(cfg);
    const auto [lo, hi] = spawn_range(level);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      env.reset(seed);
      int cavs = 0, hvs = 0;
      for (const auto& v : env.vehicles()) {
        cavs += v.kind == VehicleKind::CAV;
        hvs += v.kind == VehicleKind::HV;
        CHECK(v.v >= 25.0);
        CHECK(v.v <= 27.0);
        for (const auto& o : env.vehicles()) {
          if (o.id != v.id && same_lane_slot(o.lane, v.lane)) CHECK(std::fabs(o.x - v.x) >= 15.0);
        }
      }
      if (env.reset_notes().empty()) {
        CHECK(cavs >= lo);
        CHECK(cavs <= hi);
        CHECK(hvs >= lo);
        CHECK(hvs <= hi);
      }
    }
  }
  CHECK(spawn_range(TrafficLevel::Easy) == std::pair{1, 3});
  CHECK(spawn_range(TrafficLevel::Hard) == std::pair{3, 6});
}

TEST_CASE("heterogeneous mode draws every style, homogeneous mode only Normal") {
  EnvConfig cfg;
  cfg.mode = {TrafficLevel::Hard, true};
  MergingEnv hetero(cfg);
  int seen[3] = {0, 0, 0};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    hetero.reset(seed);
    for (const auto& v : hetero.vehicles()) {
      if (v.kind == VehicleKind::HV) ++seen[static_cast<int>(v.style)];
    }
  }
  CHECK(seen[0] > 0);
  CHECK(seen[1] > 0);
  CHECK(seen[2] > 0);
  cfg.mode.heterogeneous = false;
  MergingEnv homo(cfg);
  homo.reset(4);
  for (const auto& v : homo.vehicles()) CHECK(v.style == DrivingStyle::Normal);
}

TEST_CASE("same seed and actions replay bit for bit") {
  EnvConfig cfg;
  MergingEnv a(cfg), b(cfg);
  a.reset(0);
  b.reset(0);
  REQUIRE(a.vehicles().size() == b.vehicles().size());
  for (int step = 0; step < 40 && !a.done(); ++step) {
    std::map<VehicleId, HighLevelAction> act;
    for (VehicleId id : a.live_cav_ids()) act[id] = action_from_index((step + id) % kNumActions);
    const auto oa = a.step(act);
    const auto ob = b.step(act);
    CHECK(oa.rewards == ob.rewards);
    CHECK(oa.done == ob.done);
    for (std::size_t i = 0; i < a.vehicles().size(); ++i) {
      CHECK(a.vehicles()[i].x == b.vehicles()[i].x);
      CHECK(a.vehicles()[i].y == b.vehicles()[i].y);
      CHECK(a.vehicles()[i].v == b.vehicles()[i].v);
    }
  }
}

TEST_CASE("stepping a finished episode reports done immediately") {
  EnvConfig cfg;
  cfg.horizon = 1;
  MergingEnv env(cfg);
  env.load_scene({make(1, 50, 0, 25)});
  const auto first = env.step({{1, HighLevelAction::Cruising}});
  CHECK(first.done);
  CHECK(first.info.cause == TerminalCause::Horizon);
  const auto again = env.step({});
  CHECK(again.done);
  CHECK(again.rewards.at(1) == 0.0);
}

TEST_CASE("actions for unknown agents are ignored, missing ones rejected") {
  EnvConfig cfg;
  MergingEnv env(cfg);
  env.load_scene({make(1, 50, 0, 25)});
  const auto out = env.step({{1, HighLevelAction::Cruising}, {7, HighLevelAction::SpeedUp}});
  CHECK(out.info.ignored_actions == std::vector<VehicleId>{7});
  CHECK_THROWS_AS(env.step({}), std::invalid_argument);
}

TEST_CASE("exited agents stop earning reward") {
  EnvConfig cfg;
  MergingEnv env(cfg);
  env.load_scene({make(1, 515, 0, 25), make(2, 100, 0, 25)});
  const auto out = env.step({{1, HighLevelAction::Cruising}, {2, HighLevelAction::Cruising}});
  CHECK(out.finished == std::vector<VehicleId>{1});
  CHECK_FALSE(env.is_live(1));
  const auto next = env.step({{2, HighLevelAction::Cruising}});
  CHECK(next.rewards.at(1) == 0.0);
  for (double x : next.observations.at(1).data) CHECK(x == 0.0);
}

TEST_CASE("collision terminates the episode and fires the collision term") {
  EnvConfig cfg;
  cfg.sem_enabled = false;
  MergingEnv env(cfg);
  env.load_scene({make(1, 100, 0, 30), make(2, 110, 0, 10, VehicleKind::HV)});
  const auto out = env.step({{1, HighLevelAction::SpeedUp}});
  CHECK(out.done);
  CHECK(out.info.cause == TerminalCause::Collision);
  CHECK(out.info.reward_terms.at(1).collision == -1.0);
}

TEST_CASE("the shield cuts crashes of a random policy and keeps it off the lane end") {
  const CrashCounts plain = random_policy_crashes(false);
  const CrashCounts shielded = random_policy_crashes(true);
  CHECK(plain.barrier > 20);
  CHECK(shielded.barrier == 0);
  CHECK(2 * shielded.episodes_with_crash < plain.episodes_with_crash);
}
