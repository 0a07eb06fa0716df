#ifndef MERGESIM_COMMANDS_HPP_
#define MERGESIM_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mergesim/config.hpp"
#include "mergesim/metrics.hpp"
#include "mergesim/trainer.hpp"

namespace mergesim {

inline constexpr const char* kOutputEnvVar = "MERGESIM_OUT";

// Output root: command-line value if given, else $MERGESIM_OUT, else the
// config's output field.
std::filesystem::path output_root(const RunConfig& cfg, const std::string& flag_value = {});

// Default run directory name, e.g. "easy-hetero-nosem-seed0".
std::string default_run_id(const RunConfig& cfg, std::uint64_t seed, const std::string& command);

struct TrainOutput {
  TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path curves;
};

// Trains one seed and writes config.json, checkpoints/final.json and
// curves.csv into run_dir.
TrainOutput cmd_train(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& run_dir,
                      std::ostream* log = nullptr);

// Greedy evaluation of a checkpoint; writes config.json,
// replays/episodes.jsonl and metrics/*.csv into run_dir.
MetricsReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::uint64_t seed,
                       const std::filesystem::path& run_dir);

// Recomputes the metrics of a replay log into metrics_dir.
MetricsReport cmd_replay(const RunConfig& cfg, const std::filesystem::path& log,
                         const std::filesystem::path& metrics_dir);

PetZone pet_zone_of(const RunConfig& cfg, const RoadLayout& layout);

}  // namespace mergesim

#endif  // MERGESIM_COMMANDS_HPP_
