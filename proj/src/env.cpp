#include "mergesim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mergesim/collision.hpp"
#include "mergesim/traffic.hpp"

namespace mergesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObservationMatrix zero_observation(int rows) {
  return {rows, std::vector<double>(static_cast<std::size_t>(rows * kObservationFeatures), 0.0)};
}

double clip_unit(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

std::string_view to_string(TrafficLevel l) { return l == TrafficLevel::Easy ? "easy" : "hard"; }

TrafficLevel traffic_level_from_string(std::string_view s) {
  if (s == "easy") return TrafficLevel::Easy;
  if (s == "hard") return TrafficLevel::Hard;
  throw std::invalid_argument("unknown traffic mode: " + std::string(s));
}

std::string_view to_string(TerminalCause c) {
  switch (c) {
    case TerminalCause::None: return "none";
    case TerminalCause::Collision: return "collision";
    case TerminalCause::AllExited: return "all_exited";
    case TerminalCause::Horizon: return "horizon";
  }
  return "none";
}

TerminalCause terminal_cause_from_string(std::string_view s) {
  if (s == "none") return TerminalCause::None;
  if (s == "collision") return TerminalCause::Collision;
  if (s == "all_exited") return TerminalCause::AllExited;
  if (s == "horizon") return TerminalCause::Horizon;
  throw std::invalid_argument("unknown terminal cause: " + std::string(s));
}

std::pair<int, int> spawn_range(TrafficLevel level) {
  return level == TrafficLevel::Easy ? std::pair{1, 3} : std::pair{3, 6};
}

RewardTerms compute_reward(const RoadLayout& layout, const RewardParams& p, const VehicleState& ego,
                           double headway, bool collided) {
  RewardTerms r;
  r.collision = collided ? -1.0 : 0.0;
  r.speed = std::min((ego.v - p.min_speed) / (p.max_speed - p.min_speed), 1.0);
  if (std::isfinite(headway)) {
    if (headway > 0.0) {
      const double ratio = headway / (p.time_headway * std::max(ego.v, 0.1));
      r.headway = std::clamp(std::log(ratio), -p.headway_clamp, p.headway_clamp);
    } else {
      r.headway = -p.headway_clamp;
    }
  }
  if (is_on_merge_lane(layout, ego)) {
    const double x = ramp_progress(layout, ego);
    const double len = layout.total_ramp_length();
    r.merging = p.merging_sign * std::exp(-(x - len) * (x - len) / (10.0 * len));
  }
  r.total = p.omega[0] * r.collision + p.omega[1] * r.speed + p.omega[2] * r.headway +
            p.omega[3] * r.merging;
  return r;
}

MergingEnv::MergingEnv(EnvConfig config)
    : cfg_(std::move(config)), layout_(build_layout(cfg_.layout)), barrier_(layout_.end_barrier()) {
  if (cfg_.observation.rows < 1) throw std::invalid_argument("observation rows must be >= 1");
  if (cfg_.max_cavs < spawn_range(cfg_.mode.level).second) {
    throw std::invalid_argument("max_cavs below the spawn range of the traffic mode");
  }
}

bool MergingEnv::spawn(std::mt19937_64& rng, int n_cav, int n_hv) {
  const SpawnParams& sp = cfg_.spawn;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> style_pick(0, 2);
  vehicles_.clear();
  const int total = n_cav + n_hv;
  for (int i = 0; i < total; ++i) {
    VehicleState v;
    v.id = i;
    v.kind = i < n_cav ? VehicleKind::CAV : VehicleKind::HV;
    if (v.kind == VehicleKind::HV && cfg_.mode.heterogeneous) {
      v.style = static_cast<DrivingStyle>(style_pick(rng));
    }
    bool placed = false;
    for (int attempt = 0; attempt < sp.max_attempts && !placed; ++attempt) {
      const bool ramp = unit(rng) < 0.5;
      const double lo = ramp ? sp.ramp_min_x : sp.through_min_x;
      const double hi = ramp ? sp.ramp_max_x : sp.through_max_x;
      const double x = lo + (hi - lo) * unit(rng);
      const LaneRef lane = layout_.lane_at(x, ramp ? -layout_.lane_width() : 0.0);
      const bool clear = std::none_of(vehicles_.begin(), vehicles_.end(), [&](const VehicleState& o) {
        return same_lane_slot(o.lane, lane) && std::abs(o.x - x) < sp.min_spacing;
      });
      if (!clear) continue;
      v.x = x;
      v.lane = lane;
      v.y = layout_.lane_center_y(lane);
      placed = true;
    }
    if (!placed) return false;
    v.v = sp.base_speed + sp.speed_noise * unit(rng);
    vehicles_.push_back(v);
  }
  return true;
}

std::map<VehicleId, ObservationMatrix> MergingEnv::reset(std::uint64_t seed, int episode_index) {
  seed_ = seed;
  step_ = 0;
  done_ = false;
  notes_.clear();
  last_state_.clear();
  std::mt19937_64 rng(seed);
  const auto [lo, hi] = spawn_range(cfg_.mode.level);
  std::uniform_int_distribution<int> count(lo, hi);
  int n_cav = count(rng);
  int n_hv = count(rng);
  while (!spawn(rng, n_cav, n_hv)) {
    // Shrink the larger class first; never drop the last CAV.
    if (n_hv >= n_cav && n_hv > 0) {
      --n_hv;
    } else if (n_cav > 1) {
      --n_cav;
    } else {
      throw std::runtime_error("reset: cannot place a single vehicle");
    }
    notes_.push_back("spawn retry with " + std::to_string(n_cav) + " CAVs and " +
                     std::to_string(n_hv) + " HVs");
  }
  cav_ids_.clear();
  hv_targets_.clear();
  for (const auto& v : vehicles_) {
    if (v.kind == VehicleKind::CAV) cav_ids_.push_back(v.id);
    if (v.kind == VehicleKind::HV) hv_targets_[v.id] = v.lane;
  }
  record_ = {};
  record_.episode = episode_index;
  record_.seed = seed;
  record_.dt = cfg_.timing.dt;
  record_.substeps_per_decision = cfg_.timing.substeps_per_decision;
  if (recording_) record_frame(0.0);

  std::map<VehicleId, ObservationMatrix> obs;
  for (VehicleId id : cav_ids_) obs[id] = observe(id);
  return obs;
}

void MergingEnv::load_scene(std::vector<VehicleState> vehicles, std::uint64_t seed) {
  vehicles_ = std::move(vehicles);
  seed_ = seed;
  step_ = 0;
  done_ = false;
  notes_.clear();
  last_state_.clear();
  cav_ids_.clear();
  hv_targets_.clear();
  for (auto& v : vehicles_) {
    v.lane = layout_.lane_at(v.x, v.y);
    if (v.kind == VehicleKind::CAV) cav_ids_.push_back(v.id);
    if (v.kind == VehicleKind::HV) hv_targets_[v.id] = v.lane;
  }
  std::sort(cav_ids_.begin(), cav_ids_.end());
  record_ = {};
  record_.seed = seed;
  record_.dt = cfg_.timing.dt;
  record_.substeps_per_decision = cfg_.timing.substeps_per_decision;
  if (recording_) record_frame(0.0);
}

std::vector<VehicleId> MergingEnv::live_cav_ids() const {
  std::vector<VehicleId> ids;
  for (const auto& v : vehicles_) {
    if (v.kind == VehicleKind::CAV) ids.push_back(v.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

const VehicleState* MergingEnv::find(VehicleId id) const {
  for (const auto& v : vehicles_) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

bool MergingEnv::is_live(VehicleId id) const { return find(id) != nullptr; }

std::vector<VehicleState> MergingEnv::with_barrier() const {
  std::vector<VehicleState> all = vehicles_;
  all.push_back(barrier_);
  return all;
}

ObservationMatrix MergingEnv::observe(VehicleId id) const {
  const ObservationParams& op = cfg_.observation;
  ObservationMatrix m = zero_observation(op.rows);
  const VehicleState* ego = find(id);
  if (!ego) return m;

  const double ego_vx = ego->v * std::cos(ego->heading);
  const double ego_vy = ego->v * std::sin(ego->heading);
  m.at(0, 0) = 1.0;
  m.at(0, 1) = clip_unit(ego->x / layout_.through_length());
  m.at(0, 2) = clip_unit(ego->y / op.position_scale);
  m.at(0, 3) = clip_unit(ego_vx / op.speed_scale);
  m.at(0, 4) = clip_unit(ego_vy / op.speed_scale);

  std::vector<const VehicleState*> near;
  auto consider = [&](const VehicleState& o) {
    if (o.id != ego->id && std::abs(o.x - ego->x) <= cfg_.safety.perception_range) near.push_back(&o);
  };
  for (const auto& o : vehicles_) consider(o);
  consider(barrier_);
  std::sort(near.begin(), near.end(), [&](const VehicleState* a, const VehicleState* b) {
    const double da = std::abs(a->x - ego->x);
    const double db = std::abs(b->x - ego->x);
    if (da != db) return da < db;
    return a->id < b->id;
  });
  const int n = std::min<int>(static_cast<int>(near.size()), op.rows - 1);
  for (int r = 1; r <= n; ++r) {
    const VehicleState& o = *near[static_cast<std::size_t>(r - 1)];
    m.at(r, 0) = 1.0;
    m.at(r, 1) = clip_unit((o.x - ego->x) / op.position_scale);
    m.at(r, 2) = clip_unit((o.y - ego->y) / op.position_scale);
    m.at(r, 3) = clip_unit((o.v * std::cos(o.heading) - ego_vx) / op.speed_scale);
    m.at(r, 4) = clip_unit((o.v * std::sin(o.heading) - ego_vy) / op.speed_scale);
  }
  return m;
}

std::vector<double> MergingEnv::global_state(VehicleId ego) const {
  std::vector<double> out(static_cast<std::size_t>(global_state_size()), 0.0);
  std::size_t block = 0;
  auto put = [&](VehicleId id) {
    const ObservationMatrix m = observe(id);
    std::copy(m.data.begin(), m.data.end(), out.begin() + static_cast<std::ptrdiff_t>(block * m.data.size()));
    ++block;
  };
  put(ego);
  for (VehicleId id : cav_ids_) {
    if (id == ego) continue;
    if (block >= static_cast<std::size_t>(cfg_.max_cavs)) break;
    put(id);
  }
  return out;
}

void MergingEnv::record_frame(double t) {
  record_.frames.push_back({t, vehicles_});
}

std::vector<std::pair<VehicleId, VehicleId>> MergingEnv::detect_collisions() const {
  std::vector<std::pair<VehicleId, VehicleId>> hits;
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const OrientedBox a = footprint(vehicles_[i]);
    for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
      if (boxes_overlap(a, footprint(vehicles_[j]))) hits.emplace_back(vehicles_[i].id, vehicles_[j].id);
    }
    if (boxes_overlap(a, footprint(barrier_))) hits.emplace_back(vehicles_[i].id, barrier_.id);
  }
  return hits;
}

StepOutcome MergingEnv::step(const std::map<VehicleId, HighLevelAction>& proposed) {
  StepOutcome out;
  const std::vector<VehicleId> live = live_cav_ids();
  if (done_ || live.empty()) {
    done_ = true;
    out.done = true;
    for (VehicleId id : cav_ids_) {
      out.observations[id] = zero_observation(cfg_.observation.rows);
      out.rewards[id] = 0.0;
    }
    return out;
  }

  std::map<VehicleId, HighLevelAction> actions;
  for (const auto& [id, a] : proposed) {
    if (std::binary_search(live.begin(), live.end(), id)) {
      actions[id] = a;
    } else {
      out.info.ignored_actions.push_back(id);
    }
  }
  for (VehicleId id : live) {
    if (!actions.contains(id)) {
      throw std::invalid_argument("step: missing action for live CAV " + std::to_string(id));
    }
  }
  out.acted = live;

  const RolloutSettings rollout = cfg_.rollout();
  const std::vector<VehicleState> snapshot = with_barrier();
  std::map<VehicleId, HighLevelAction> executed = actions;
  DecisionRecord decision;
  decision.step = step_;

  if (cfg_.igm_enabled) {
    std::map<VehicleId, IntentTrajectory> intents;
    for (VehicleId id : live) intents[id] = generate_intent(layout_, *find(id), actions[id], rollout, step_);
    if (cfg_.sem_enabled) {
      SemContext ctx{rollout, cfg_.safety, cfg_.styles, NoiseKey{seed_, step_}};
      SemResult sem = run_sem(layout_, snapshot, hv_targets_, actions, intents, ctx);
      executed = sem.actions;
      out.info.conflicts = sem.conflicts;
      for (const auto& c : sem.checks) {
        if (!c.had_conflict) continue;
        out.info.corrections.push_back({c.ego, actions[c.ego], executed[c.ego], c.resolved});
      }
      intents = std::move(sem.intents);
    }
    if (recording_) {
      for (auto& [id, t] : intents) decision.intents.push_back(std::move(t));
    }
  }
  out.info.executed = executed;

  std::map<VehicleId, ActionTarget> cav_targets;
  for (VehicleId id : live) {
    cav_targets[id] = execute_action(layout_, *find(id), executed[id], cfg_.gains);
  }
  for (const auto& v : vehicles_) {
    if (v.kind != VehicleKind::HV) continue;
    hv_targets_[v.id] = hv_choose_lane(layout_, v, hv_targets_.at(v.id), snapshot,
                                       style_params(v.style, cfg_.styles));
  }

  const double dt = cfg_.timing.dt;
  std::vector<std::pair<VehicleId, VehicleId>> collisions;
  for (int i = 0; i < cfg_.timing.substeps_per_decision; ++i) {
    const std::vector<VehicleState> current = with_barrier();
    std::vector<VehicleState> next;
    next.reserve(vehicles_.size());
    for (const auto& v : vehicles_) {
      if (v.kind == VehicleKind::CAV) {
        next.push_back(track_target(layout_, v, cav_targets.at(v.id), cfg_.gains, dt));
      } else {
        const LaneRef target = hv_targets_.at(v.id);
        const double a = hv_accel(v, target, current, style_params(v.style, cfg_.styles).idm);
        next.push_back(drive_substep(layout_, v, a, target, cfg_.gains, dt));
      }
    }
    vehicles_ = std::move(next);
    collisions = detect_collisions();

    std::vector<VehicleState> kept;
    kept.reserve(vehicles_.size());
    for (const auto& v : vehicles_) {
      if (v.x - 0.5 * v.length > layout_.through_length()) {
        if (v.kind == VehicleKind::CAV) {
          last_state_[v.id] = v;
          out.info.exited.push_back(v.id);
        }
        hv_targets_.erase(v.id);
      } else {
        kept.push_back(v);
      }
    }
    vehicles_ = std::move(kept);
    if (recording_) record_frame(step_ * cfg_.timing.decision_interval() + (i + 1) * dt);
    if (!collisions.empty()) break;
  }
  ++step_;
  out.info.collisions = collisions;

  std::vector<VehicleId> collided;
  for (const auto& [a, b] : collisions) {
    collided.push_back(a);
    collided.push_back(b);
  }
  const std::vector<VehicleState> after = with_barrier();
  for (VehicleId id : cav_ids_) out.rewards[id] = 0.0;
  for (VehicleId id : live) {
    const VehicleState* now = find(id);
    const VehicleState& s = now ? *now : last_state_.at(id);
    const double headway = now ? headway_distance(s, after) : kInf;
    const bool hit = std::find(collided.begin(), collided.end(), id) != collided.end();
    const RewardTerms terms = compute_reward(layout_, cfg_.reward, s, headway, hit);
    out.rewards[id] = terms.total;
    out.info.reward_terms[id] = terms;
    decision.agents.push_back({id, actions[id], executed[id], terms});
  }

  if (!collisions.empty()) {
    out.info.cause = TerminalCause::Collision;
  } else if (live_cav_ids().empty()) {
    out.info.cause = TerminalCause::AllExited;
  } else if (step_ >= cfg_.horizon) {
    out.info.cause = TerminalCause::Horizon;
  }
  out.done = out.info.cause != TerminalCause::None;
  done_ = out.done;

  for (VehicleId id : live) {
    const bool exited = !is_live(id);
    if (exited || out.done) out.finished.push_back(id);
  }
  for (VehicleId id : cav_ids_) out.observations[id] = observe(id);

  if (recording_) {
    decision.collision = !collisions.empty();
    decision.conflicts = out.info.conflicts;
    decision.corrections = out.info.corrections;
    record_.decisions.push_back(std::move(decision));
    if (out.done) record_.cause = out.info.cause;
  }
  return out;
}

}  // namespace mergesim
