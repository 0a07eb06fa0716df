// mergesim: train, evaluate and replay on-ramp merging policies.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mergesim/commands.hpp"
#include "mergesim/replay.hpp"

namespace fs = std::filesystem;
using namespace mergesim;

namespace {

struct CommonFlags {
  std::string config;
  std::string mode;
  bool hetero = false;
  std::optional<std::uint64_t> seed;
  bool no_sem = false;
  bool no_igm = false;
  std::string out;
  std::string run_id;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--mode", f.mode, "traffic mode")->check(CLI::IsMember({"easy", "hard"}));
  app->add_flag("--hetero", f.hetero, "heterogeneous HV driving styles");
  app->add_option("--seed", f.seed, "single seed (default: the config's seed list)");
  app->add_flag("--no-sem", f.no_sem, "disable the safety module (plain MAPPO)");
  app->add_flag("--no-igm", f.no_igm, "disable intent generation (also disables the safety module)");
  app->add_option("--out", f.out, "output root (overrides MERGESIM_OUT and the config)");
  app->add_option("--run-id", f.run_id, "run directory name under the output root");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.mode.empty()) cfg.env.mode.level = traffic_level_from_string(f.mode);
  if (f.hetero) cfg.env.mode.heterogeneous = true;
  if (f.no_sem) cfg.env.sem_enabled = false;
  if (f.no_igm) {
    cfg.env.igm_enabled = false;
    cfg.env.sem_enabled = false;
  }
  if (f.seed) cfg.seeds = {*f.seed};
  validate(cfg);
  return cfg;
}

fs::path run_dir(const CommonFlags& f, const RunConfig& cfg, std::uint64_t seed, const std::string& cmd) {
  const fs::path root = output_root(cfg, f.out);
  if (f.run_id.empty()) return root / default_run_id(cfg, seed, cmd);
  return cfg.seeds.size() > 1 ? root / (f.run_id + "-seed" + std::to_string(seed)) : root / f.run_id;
}

void print_summary(const MetricsReport& m) {
  std::cout << "episodes " << m.episodes << "\ncollision_rate " << format_double(m.collision_rate)
            << "\naverage_speed " << format_double(m.average_speed) << "\nmean_reward "
            << format_double(m.mean_reward) << "\npet_count " << m.pet.size() << '\n';
  for (const auto& e : m.per_episode) {
    std::cout << "episode " << e.episode << " steps " << e.steps << " reward " << format_double(e.reward)
              << " corrections " << e.corrections << " unresolved " << e.unresolved << " cause "
              << to_string(e.cause) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-ramp merging simulator with MAPPO and an intent-sharing safety shield"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  long steps = -1;
  std::string curriculum;
  auto* train = app.add_subcommand("train", "train a shared policy");
  add_common(train, train_flags);
  train->add_option("--steps", steps, "total environment steps")->check(CLI::NonNegativeNumber);
  train->add_option("--curriculum-from", curriculum, "initialize from an easy-mode checkpoint")
      ->check(CLI::ExistingFile);

  CommonFlags eval_flags;
  std::string checkpoint;
  int episodes = -1;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint greedily");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "number of evaluation episodes (default 30)");

  CommonFlags replay_flags;
  std::string log_path;
  std::string metrics_out;
  auto* replay = app.add_subcommand("replay", "recompute metrics from a replay log");
  replay->add_option("log", log_path, "JSON-lines replay log")->required()->check(CLI::ExistingFile);
  replay->add_option("--config", replay_flags.config, "config used for the run (default: the run's echo)");
  replay->add_option("--metrics-out", metrics_out, "directory for the recomputed CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      RunConfig cfg = resolve(train_flags);
      if (steps >= 0) cfg.total_steps = steps;
      if (!curriculum.empty()) cfg.curriculum_from = curriculum;
      validate(cfg);
      for (std::uint64_t seed : cfg.seeds) {
        const fs::path dir = run_dir(train_flags, cfg, seed, "train");
        std::cerr << "training seed " << seed << " -> " << dir.string() << '\n';
        const TrainOutput out = cmd_train(cfg, seed, dir, &std::cerr);
        std::cout << "checkpoint " << out.checkpoint.string() << "\ncurves " << out.curves.string() << '\n';
      }
    } else if (*eval) {
      RunConfig cfg = resolve(eval_flags);
      if (eval->count("--episodes")) {
        if (episodes < 1) throw ConfigError("--episodes", "must be >= 1");
        cfg.eval.episodes = episodes;
      }
      for (std::uint64_t seed : cfg.seeds) {
        const fs::path dir = run_dir(eval_flags, cfg, seed, "eval");
        const MetricsReport m = cmd_eval(cfg, checkpoint, seed, dir);
        std::cout << "run " << dir.string() << '\n';
        print_summary(m);
      }
    } else if (*replay) {
      fs::path cfg_path = replay_flags.config;
      const fs::path log(log_path);
      const fs::path run = log.parent_path().parent_path();
      if (cfg_path.empty() && fs::exists(run / "config.json")) cfg_path = run / "config.json";
      const RunConfig cfg = cfg_path.empty() ? RunConfig{} : load_config(cfg_path);
      const fs::path dest = metrics_out.empty() ? run / "replay_metrics" : fs::path(metrics_out);
      const MetricsReport m = cmd_replay(cfg, log, dest);
      std::cout << "metrics " << dest.string() << '\n';
      print_summary(m);
    }
  } catch (const ReplayError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
