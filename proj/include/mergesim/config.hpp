#ifndef MERGESIM_CONFIG_HPP_
#define MERGESIM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mergesim/env.hpp"
#include "mergesim/metrics.hpp"
#include "mergesim/trainer.hpp"

namespace mergesim {

struct EvalSettings {
  int episodes = 30;
  bool custom_zone = false;  // false: merge end +- 10 m
  PetZone pet_zone{};
  int tms_window = 5;

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct RunConfig {
  EnvConfig env{};
  PpoHyper ppo{};
  long total_steps = 100000;
  int n_envs = 4;
  int rollout_steps = 128;
  int eval_every_episodes = 200;
  int eval_episodes = 3;
  bool store_corrected_action = false;
  std::vector<std::uint64_t> seeds{0, 1000, 2024};
  EvalSettings eval{};
  std::string curriculum_from;
  std::string output = "out";  // not part of the hash

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Throws ConfigError with the dotted path of the offending field.
void validate(const RunConfig& cfg);

// Canonical JSON text with every field; the output root is omitted when
// include_output is false.
std::string to_json_text(const RunConfig& cfg, bool include_output = true);

// Missing fields keep their defaults; unknown keys and bad values throw
// ConfigError. An empty or whitespace-only text yields the defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical text without the output root.
std::uint64_t config_hash(const RunConfig& cfg);

// Writes config.json into dir.
void write_config_echo(const RunConfig& cfg, const std::filesystem::path& dir);

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed);

}  // namespace mergesim

#endif  // MERGESIM_CONFIG_HPP_
