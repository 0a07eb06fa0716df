#include "mergesim/intent.hpp"

#include <stdexcept>

#include "mergesim/traffic.hpp"

namespace mergesim {

IntentSample sample_of(const VehicleState& v) { return {v.x, v.y, v.v, v.heading}; }

namespace {

IntentTrajectory empty_for(const VehicleState& v, const RolloutSettings& s, int created_at) {
  IntentTrajectory t;
  t.owner = v.id;
  t.created_at = created_at;
  t.length = v.length;
  t.width = v.width;
  t.samples.reserve(static_cast<std::size_t>(s.horizon));
  return t;
}

}  // namespace

IntentTrajectory generate_intent(const RoadLayout& layout, const VehicleState& state,
                                 HighLevelAction action, const RolloutSettings& settings,
                                 int created_at) {
  if (state.kind != VehicleKind::CAV) {
    throw std::invalid_argument("generate_intent: only CAVs publish intents");
  }
  IntentTrajectory out = empty_for(state, settings, created_at);
  const ActionTarget target = execute_action(layout, state, action, settings.gains);
  VehicleState s = state;
  for (int k = 0; k < settings.horizon; ++k) {
    for (int i = 0; i < settings.timing.substeps_per_decision; ++i) {
      s = track_target(layout, s, target, settings.gains, settings.timing.dt);
    }
    out.samples.push_back(sample_of(s));
  }
  return out;
}

IntentTrajectory predict_hv(const RoadLayout& layout, const VehicleState& hv,
                            LaneRef current_target, std::span<const VehicleState> snapshot,
                            const StyleParams& style, const RolloutSettings& settings,
                            int created_at) {
  IntentTrajectory out = empty_for(hv, settings, created_at);
  std::vector<VehicleState> others;
  others.reserve(snapshot.size());
  for (const auto& o : snapshot) {
    if (o.id != hv.id) others.push_back(o);
  }
  const double dt = settings.timing.dt;
  VehicleState s = hv;
  LaneRef target = current_target;
  for (int k = 0; k < settings.horizon; ++k) {
    target = hv_choose_lane(layout, s, target, others, style);
    for (int i = 0; i < settings.timing.substeps_per_decision; ++i) {
      const double a = hv_accel(s, target, others, style.idm);
      s = drive_substep(layout, s, a, target, settings.gains, dt);
      for (auto& o : others) o.x += o.v * dt;
    }
    out.samples.push_back(sample_of(s));
  }
  return out;
}

IntentTrajectory hold_course(const VehicleState& v, const RolloutSettings& settings,
                             int created_at) {
  IntentTrajectory out = empty_for(v, settings, created_at);
  const double interval = settings.timing.decision_interval();
  for (int k = 1; k <= settings.horizon; ++k) {
    IntentSample smp = sample_of(v);
    smp.x += v.v * interval * k;
    out.samples.push_back(smp);
  }
  return out;
}

}  // namespace mergesim
