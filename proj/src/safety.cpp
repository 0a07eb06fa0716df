#include "mergesim/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "mergesim/collision.hpp"

namespace mergesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool through_slot_at(const RoadLayout& layout, const IntentSample& s) {
  return layout.lane_at(s.x, s.y).kind == LaneKind::Through;
}

VehicleState pose_of(const IntentTrajectory& t, std::size_t k) {
  VehicleState v;
  v.id = t.owner;
  v.x = t.samples[k].x;
  v.y = t.samples[k].y;
  v.heading = t.samples[k].heading;
  v.v = t.samples[k].v;
  v.length = t.length;
  v.width = t.width;
  return v;
}

}  // namespace

double priority_noise(std::uint64_t seed, int step, VehicleId id, double variance) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(step)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(id)));
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  return normal(rng);
}

double headway_distance(const VehicleState& ego, std::span<const VehicleState> others) {
  const auto leader = find_leader(ego, others, ego.lane.kind == LaneKind::Through);
  return leader ? bumper_gap(ego, *leader) : kInf;
}

double headway_metric(double headway, double speed, const SafetyParams& p) {
  if (!(headway > 0.0)) return p.headway_clamp;
  const double ratio = headway / (p.time_headway * std::max(speed, p.min_speed));
  return std::clamp(-std::log(ratio), -p.headway_clamp, p.headway_clamp);
}

PriorityEntry priority_score(const RoadLayout& layout, const VehicleState& agent,
                             double headway, const SafetyParams& p, double noise) {
  double merging = 0.0;
  double merge_end = 0.0;
  if (is_on_merge_lane(layout, agent)) {
    merging = 0.5;
    merge_end = ramp_progress(layout, agent) / layout.total_ramp_length();
  }
  const double h = headway_metric(headway, agent.v, p);
  PriorityEntry e;
  e.id = agent.id;
  e.noise = noise;
  e.score = p.alpha[0] * merging + p.alpha[1] * merge_end + p.alpha[2] * h + noise;
  return e;
}

PriorityList build_priority_list(const RoadLayout& layout, std::span<const VehicleState> vehicles,
                                 const SafetyParams& p, NoiseKey key) {
  PriorityList list;
  for (const auto& v : vehicles) {
    if (v.kind != VehicleKind::CAV) continue;
    const double noise = priority_noise(key.seed, key.step, v.id, p.noise_variance);
    list.entries.push_back(priority_score(layout, v, headway_distance(v, vehicles), p, noise));
  }
  std::stable_sort(list.entries.begin(), list.entries.end(),
                   [](const PriorityEntry& a, const PriorityEntry& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.id < b.id;
                   });
  return list;
}

std::optional<ConflictReport> trajectories_conflict(const IntentTrajectory& a,
                                                    const IntentTrajectory& b,
                                                    double inflation) {
  if (a.horizon() != b.horizon()) {
    throw std::invalid_argument("trajectories_conflict: mismatched horizons");
  }
  std::optional<ConflictReport> report;
  double min_distance = kInf;
  for (std::size_t k = 0; k < a.horizon(); ++k) {
    const VehicleState pa = pose_of(a, k);
    const VehicleState pb = pose_of(b, k);
    min_distance = std::min(min_distance, std::hypot(pa.x - pb.x, pa.y - pb.y));
    if (!report && boxes_overlap(footprint(pa, inflation), footprint(pb, inflation))) {
      report = ConflictReport{a.owner, b.owner, static_cast<int>(k) + 1, 0.0};
    }
  }
  if (report) report->min_distance = min_distance;
  return report;
}

bool is_lane_change(const RoadLayout& layout, const VehicleState& ego, HighLevelAction action) {
  if (action != HighLevelAction::TurnLeft && action != HighLevelAction::TurnRight) return false;
  return action_available(layout, ego, action);
}

double safety_margin(const RoadLayout& layout, const VehicleState& ego, HighLevelAction action,
                     const IntentTrajectory& ego_intent,
                     std::span<const IntentTrajectory> neighbors, int k) {
  const std::size_t idx = static_cast<std::size_t>(k - 1);
  const IntentSample& e = ego_intent.samples.at(idx);
  double margin = kInf;
  if (is_lane_change(layout, ego, action)) {
    // Current and target lanes together cover both slots of the road.
    for (const auto& n : neighbors) {
      const double half = 0.5 * (ego_intent.length + n.length);
      margin = std::min(margin, std::abs(n.samples.at(idx).x - e.x) - half);
    }
    return margin;
  }
  const bool ego_through = through_slot_at(layout, e);
  for (const auto& n : neighbors) {
    const IntentSample& s = n.samples.at(idx);
    // Leader: front bumper ahead of ego's; a long obstacle being driven
    // through stays a leader with negative clearance.
    const bool ahead = s.x + 0.5 * n.length > e.x + 0.5 * ego_intent.length;
    if (through_slot_at(layout, s) != ego_through || !ahead) continue;
    margin = std::min(margin, s.x - e.x - 0.5 * (ego_intent.length + n.length));
  }
  return margin;
}

double min_safety_margin(const RoadLayout& layout, const VehicleState& ego,
                         HighLevelAction action, const IntentTrajectory& ego_intent,
                         std::span<const IntentTrajectory> neighbors) {
  double worst = kInf;
  for (int k = 1; k <= static_cast<int>(ego_intent.horizon()); ++k) {
    worst = std::min(worst, safety_margin(layout, ego, action, ego_intent, neighbors, k));
  }
  return worst;
}

int tie_break_rank(HighLevelAction a) {
  switch (a) {
    case HighLevelAction::SlowDown: return 0;
    case HighLevelAction::Cruising: return 1;
    case HighLevelAction::SpeedUp: return 2;
    case HighLevelAction::TurnRight: return 3;
    case HighLevelAction::TurnLeft: return 4;
  }
  return 5;
}

std::vector<HighLevelAction> available_actions(const RoadLayout& layout, const VehicleState& ego) {
  std::vector<HighLevelAction> out;
  for (HighLevelAction a : kAllActions) {
    if (action_available(layout, ego, a)) out.push_back(a);
  }
  return out;
}

Correction correct_intention(const RoadLayout& layout, const VehicleState& ego,
                             std::span<const HighLevelAction> candidates,
                             std::span<const IntentTrajectory> neighbors,
                             const RolloutSettings& settings, const SafetyParams& p,
                             int created_at) {
  if (candidates.empty()) {
    throw std::invalid_argument("correct_intention: no candidate actions");
  }
  Correction out;
  out.assessed.reserve(candidates.size());
  bool any_safe = false;
  for (HighLevelAction a : candidates) {
    const IntentTrajectory intent = generate_intent(layout, ego, a, settings, created_at);
    ActionAssessment as;
    as.action = a;
    as.min_margin = min_safety_margin(layout, ego, a, intent, neighbors);
    for (const auto& n : neighbors) {
      if (trajectories_conflict(intent, n, p.conflict_inflation)) {
        as.conflict = true;
        break;
      }
    }
    any_safe = any_safe || !as.conflict;
    out.assessed.push_back(as);
  }
  const ActionAssessment* best = nullptr;
  for (const auto& as : out.assessed) {
    if (any_safe && as.conflict) continue;
    if (!best || as.min_margin > best->min_margin ||
        (as.min_margin == best->min_margin && tie_break_rank(as.action) < tie_break_rank(best->action))) {
      best = &as;
    }
  }
  out.action = best->action;
  out.resolved = any_safe;
  return out;
}

std::vector<VehicleId> SemResult::corrected() const {
  std::vector<VehicleId> ids;
  for (const auto& c : checks) {
    if (c.corrected) ids.push_back(c.ego);
  }
  return ids;
}

std::vector<VehicleId> SemResult::unresolved() const {
  std::vector<VehicleId> ids;
  for (const auto& c : checks) {
    if (!c.resolved) ids.push_back(c.ego);
  }
  return ids;
}

SemResult run_sem(const RoadLayout& layout, std::span<const VehicleState> vehicles,
                  const std::map<VehicleId, LaneRef>& hv_targets,
                  const std::map<VehicleId, HighLevelAction>& proposed,
                  const std::map<VehicleId, IntentTrajectory>& intents, const SemContext& ctx) {
  const SafetyParams& p = ctx.safety;
  SemResult result;
  result.actions = proposed;
  result.intents = intents;
  result.priorities = build_priority_list(layout, vehicles, p, ctx.noise);

  for (const PriorityEntry& entry : result.priorities.entries) {
    const auto ego_it = std::find_if(vehicles.begin(), vehicles.end(),
                                     [&](const VehicleState& v) { return v.id == entry.id; });
    const VehicleState& ego = *ego_it;
    if (!result.actions.contains(ego.id) || !result.intents.contains(ego.id)) {
      throw std::invalid_argument("run_sem: missing proposed action or intent for a CAV");
    }

    SemCheck check;
    check.ego = ego.id;
    std::vector<IntentTrajectory> neighbors;
    for (const auto& other : vehicles) {
      if (other.id == ego.id || std::abs(other.x - ego.x) > p.perception_range) continue;
      switch (other.kind) {
        case VehicleKind::CAV:
          neighbors.push_back(result.intents.at(other.id));
          check.cav_neighbors.push_back(other.id);
          break;
        case VehicleKind::HV: {
          const auto t = hv_targets.find(other.id);
          const LaneRef target = t == hv_targets.end() ? other.lane : t->second;
          neighbors.push_back(predict_hv(layout, other, target, vehicles,
                                         style_params(other.style, ctx.styles), ctx.rollout,
                                         ctx.noise.step));
          check.hv_predictions.push_back(neighbors.back());
          break;
        }
        case VehicleKind::Obstacle:
          neighbors.push_back(hold_course(other, ctx.rollout, ctx.noise.step));
          break;
      }
    }

    const IntentTrajectory& current = result.intents.at(ego.id);
    for (const auto& n : neighbors) {
      if (auto c = trajectories_conflict(current, n, p.conflict_inflation)) {
        check.had_conflict = true;
        result.conflicts.push_back(*c);
      }
    }
    if (check.had_conflict) {
      const auto candidates = available_actions(layout, ego);
      const Correction fix = correct_intention(layout, ego, candidates, neighbors, ctx.rollout, p,
                                               ctx.noise.step);
      check.resolved = fix.resolved;
      check.corrected = fix.action != result.actions.at(ego.id);
      result.actions[ego.id] = fix.action;
      result.intents[ego.id] = generate_intent(layout, ego, fix.action, ctx.rollout, ctx.noise.step);
    }
    result.checks.push_back(std::move(check));
  }
  return result;
}

}  // namespace mergesim
