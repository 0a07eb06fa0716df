#ifndef MERGESIM_RECORD_HPP_
#define MERGESIM_RECORD_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "mergesim/intent.hpp"
#include "mergesim/safety.hpp"
#include "mergesim/types.hpp"
#include "mergesim/vehicle.hpp"

namespace mergesim {

struct RewardTerms {
  double collision = 0.0;
  double speed = 0.0;
  double headway = 0.0;
  double merging = 0.0;
  double total = 0.0;
};

struct Frame {
  double t = 0.0;
  std::vector<VehicleState> vehicles;
};

struct AgentDecision {
  VehicleId id = 0;
  HighLevelAction proposed = HighLevelAction::Cruising;
  HighLevelAction executed = HighLevelAction::Cruising;
  RewardTerms reward;
};

struct CorrectionEvent {
  VehicleId id = 0;
  HighLevelAction from = HighLevelAction::Cruising;
  HighLevelAction to = HighLevelAction::Cruising;
  bool resolved = true;
};

struct DecisionRecord {
  int step = 0;
  std::vector<AgentDecision> agents;
  bool collision = false;
  std::vector<ConflictReport> conflicts;
  std::vector<CorrectionEvent> corrections;
  std::vector<IntentTrajectory> intents;
};

enum class TerminalCause : std::uint8_t { None, Collision, AllExited, Horizon };

std::string_view to_string(TerminalCause c);
TerminalCause terminal_cause_from_string(std::string_view s);

// Everything the metrics need from one episode; frames hold the initial
// state followed by one entry per simulated substep.
struct EpisodeRecord {
  int episode = 0;
  std::uint64_t seed = 0;
  double dt = 0.1;
  int substeps_per_decision = 10;
  std::vector<Frame> frames;
  std::vector<DecisionRecord> decisions;
  TerminalCause cause = TerminalCause::None;
};

}  // namespace mergesim

#endif  // MERGESIM_RECORD_HPP_
