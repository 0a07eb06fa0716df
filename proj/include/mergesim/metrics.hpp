#ifndef MERGESIM_METRICS_HPP_
#define MERGESIM_METRICS_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mergesim/geometry.hpp"
#include "mergesim/record.hpp"

namespace mergesim {

// Decision steps flagged with a collision over all decision steps.
// Throws std::invalid_argument for no records or no decision steps.
double collision_rate(std::span<const EpisodeRecord> records);

// Mean CAV speed over every simulated substep (the initial frame excluded).
double average_speed(std::span<const EpisodeRecord> records);

// Sum of every agent's total reward divided by the number of CAVs present at
// the start of the episode.
double episode_reward(const EpisodeRecord& record);

struct PetZone {
  double x_min = 410.0;
  double x_max = 430.0;
  friend bool operator==(const PetZone&, const PetZone&) = default;
};

PetZone default_pet_zone(const RoadLayout& layout);

struct Traversal {
  VehicleId id = 0;
  double entry = 0.0;
  double exit = 0.0;
};

// Complete passes of vehicle centers through [x_min, x_max], sorted by entry
// time (then id). Crossing times are interpolated between substeps.
std::vector<Traversal> zone_traversals(const EpisodeRecord& record, const PetZone& zone);

struct PetEvent {
  int episode = 0;
  VehicleId first = 0;
  VehicleId second = 0;
  double value = 0.0;
};

// Post-encroachment time of consecutive traversals; negative gaps (both
// vehicles inside at once) are not emitted.
std::vector<PetEvent> pet(std::span<const EpisodeRecord> records, const PetZone& zone);

inline constexpr double kBreakdownSpeed = 16.0;

struct TmsGrid {
  std::vector<double> coils;
  double window_seconds = 0.0;
  // [coil][window]; nullopt when nobody crossed.
  std::vector<std::vector<std::optional<double>>> tms;
  std::vector<std::vector<bool>> breakdown;

  std::size_t windows() const { return tms.empty() ? 0 : tms.front().size(); }
};

// Time-mean speed per coil and window of `window_steps` decision steps,
// pooled over records with windows aligned at each episode start. Obstacles
// are ignored.
TmsGrid coil_tms(std::span<const EpisodeRecord> records, std::span<const double> coils,
                 int window_steps = 5);

struct EpisodeSummary {
  int episode = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  int collision_steps = 0;
  double reward = 0.0;
  int conflicts = 0;
  int corrections = 0;
  int unresolved = 0;
  TerminalCause cause = TerminalCause::None;
};

EpisodeSummary summarize(const EpisodeRecord& record);

struct MetricsReport {
  int episodes = 0;
  double collision_rate = 0.0;
  double average_speed = 0.0;
  double mean_reward = 0.0;
  std::vector<EpisodeSummary> per_episode;
  std::vector<PetEvent> pet;
  TmsGrid tms;
};

MetricsReport compute_metrics(std::span<const EpisodeRecord> records, const RoadLayout& layout,
                              const PetZone& zone, int window_steps = 5);

// Writes summary.csv, episodes.csv, pet.csv and tms.csv into dir.
void write_metrics(const MetricsReport& report, const std::filesystem::path& dir);

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace mergesim

#endif  // MERGESIM_METRICS_HPP_
