#include "mergesim/commands.hpp"

#include <cstdlib>
#include <ostream>

#include "mergesim/replay.hpp"

namespace mergesim {

std::filesystem::path output_root(const RunConfig& cfg, const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kOutputEnvVar); env && *env) return env;
  return cfg.output;
}

std::string default_run_id(const RunConfig& cfg, std::uint64_t seed, const std::string& command) {
  std::string id = command + "-" + std::string(to_string(cfg.env.mode.level));
  if (cfg.env.mode.heterogeneous) id += "-hetero";
  if (!cfg.env.igm_enabled) {
    id += "-noigm";
  } else if (!cfg.env.sem_enabled) {
    id += "-nosem";
  }
  if (!cfg.curriculum_from.empty()) id += "-curriculum";
  return id + "-seed" + std::to_string(seed);
}

PetZone pet_zone_of(const RunConfig& cfg, const RoadLayout& layout) {
  return cfg.eval.custom_zone ? cfg.eval.pet_zone : default_pet_zone(layout);
}

TrainOutput cmd_train(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& run_dir,
                      std::ostream* log) {
  validate(cfg);
  write_config_echo(cfg, run_dir);
  const TrainConfig tc = train_config(cfg, seed);
  TrainOutput out;
  out.result = train(tc, [&](const CurvePoint& p) {
    if (log) {
      *log << "step " << p.step << " episodes " << p.episodes << " reward " << p.mean_reward << " speed "
           << p.avg_speed << " collision_rate " << p.collision_rate << '\n';
    }
  });
  out.checkpoint = run_dir / "checkpoints" / "final.json";
  out.curves = run_dir / "curves.csv";
  Checkpoint ck{architecture_of(cfg.env, cfg.ppo), seed, out.result.steps, tc.config_hash, out.result.policy};
  save_checkpoint(out.checkpoint, ck);
  write_curve(out.curves, out.result.curve);
  return out;
}

MetricsReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::uint64_t seed,
                       const std::filesystem::path& run_dir) {
  validate(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint);
  require_compatible(architecture_of(cfg.env, cfg.ppo), ck.arch);
  write_config_echo(cfg, run_dir);
  const auto records = evaluate(ck.policy, cfg.env, cfg.eval.episodes, seed);
  write_replay(run_dir / "replays" / "episodes.jsonl", records);
  const RoadLayout layout = build_layout(cfg.env.layout);
  MetricsReport report = compute_metrics(records, layout, pet_zone_of(cfg, layout), cfg.eval.tms_window);
  write_metrics(report, run_dir / "metrics");
  return report;
}

MetricsReport cmd_replay(const RunConfig& cfg, const std::filesystem::path& log,
                         const std::filesystem::path& metrics_dir) {
  const auto records = read_replay(log);
  if (records.empty()) throw std::runtime_error("replay log holds no episodes: " + log.string());
  const RoadLayout layout = build_layout(cfg.env.layout);
  MetricsReport report = compute_metrics(records, layout, pet_zone_of(cfg, layout), cfg.eval.tms_window);
  write_metrics(report, metrics_dir);
  return report;
}

}  // namespace mergesim
