#include <stdexcept>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mergesim/commands.hpp"
#include "mergesim/config.hpp"

using namespace mergesim;

namespace {

std::string error_path(const std::string& text) {
  try {
    validate(parse_config(text));
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("empty text gives the published defaults") {
  for (const char* text : {"", "   \n", "{}"}) {
    const RunConfig c = parse_config(text);
    CHECK(c == RunConfig{});
    CHECK(c.env.reward.omega == std::array<double, 4>{200, 1, 4, 4});
    CHECK(c.env.safety.alpha == std::array<double, 3>{1, 1, 0.5});
    CHECK(c.env.intent_horizon == 8);
    CHECK(c.env.safety.time_headway == 1.2);
    CHECK(c.env.reward.time_headway == 1.2);
    CHECK(c.seeds == std::vector<std::uint64_t>{0, 1000, 2024});
  }
}

TEST_CASE("negative weighting coefficient is reported with its path") {
  CHECK(error_path(R"({"reward": {"omega": [-1, 1, 4, 4]}})") == "reward.omega[0]");
  CHECK(error_path(R"({"safety": {"alpha": [1, 0, 0.5]}})").rfind("safety.alpha", 0) == 0);
  CHECK(error_path(R"({"trainer": {"gamma": 1.5}})") == "trainer.gamma");
  CHECK(error_path(R"({"layout": {"merge_length": 0}})").rfind("layout", 0) == 0);
  CHECK(error_path(R"({"toggles": {"igm_enabled": false}})").rfind("toggles", 0) == 0);
}

TEST_CASE("unknown keys and wrong types are rejected") {
  CHECK(error_path(R"({"rewrad": {}})") == "rewrad");
  CHECK(error_path(R"({"reward": {"omgea": [1, 1, 1, 1]}})") == "reward.omgea");
  CHECK(error_path(R"({"intent_horizon": "eight"})") == "intent_horizon");
  CHECK(error_path(R"({"traffic": {"mode": "medium"}})") == "traffic.mode");
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
}

TEST_CASE("horizon override reaches intent generation and the shield") {
  RunConfig c = parse_config(R"({"intent_horizon": 4})");
  CHECK(c.env.intent_horizon == 4);
  CHECK(parse_config(to_json_text(c)) == c);
  const TrainConfig tc = train_config(c, 0);
  CHECK(tc.env.rollout().horizon == 4);
  MergingEnv env(tc.env);
  env.set_recording(true);
  env.reset(0);
  std::map<VehicleId, HighLevelAction> a;
  for (VehicleId id : env.live_cav_ids()) a[id] = HighLevelAction::Cruising;
  env.step(a);
  REQUIRE_FALSE(env.record().decisions.front().intents.empty());
  for (const auto& t : env.record().decisions.front().intents) CHECK(t.horizon() == 4);
}

TEST_CASE("every field round-trips and the hash tracks semantic changes") {
  RunConfig c;
  c.env.mode = {TrafficLevel::Hard, true};
  c.env.reward.omega[2] = 3.5;
  c.env.styles.timid.idm.desired_speed = 19.0;
  c.ppo.learning_rate = 1.25e-4;
  c.seeds = {7};
  c.eval.custom_zone = true;
  c.eval.pet_zone = {400, 415};
  c.curriculum_from = "some/ckpt.json";
  c.output = "elsewhere";
  const RunConfig back = parse_config(to_json_text(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  RunConfig moved = c;
  moved.output = "other-root";
  CHECK(config_hash(moved) == config_hash(c));
  RunConfig changed = c;
  changed.env.safety.alpha[1] = 1.5;
  CHECK(config_hash(changed) != config_hash(c));
  changed = c;
  changed.total_steps += 1;
  CHECK(config_hash(changed) != config_hash(c));
}

TEST_CASE("config echo and file loading") {
  const auto dir = std::filesystem::temp_directory_path() / "mergesim_config_test";
  std::filesystem::remove_all(dir);
  RunConfig c;
  c.env.horizon = 50;
  write_config_echo(c, dir);
  CHECK(load_config(dir / "config.json") == c);
  std::ofstream(dir / "empty.json") << "";
  CHECK(load_config(dir / "empty.json") == RunConfig{});
  CHECK_THROWS(load_config(dir / "missing.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("output root precedence and run ids") {
  RunConfig c;
  c.output = "from-config";
  unsetenv(kOutputEnvVar);
  CHECK(output_root(c) == "from-config");
  setenv(kOutputEnvVar, "from-env", 1);
  CHECK(output_root(c) == "from-env");
  CHECK(output_root(c, "from-flag") == "from-flag");
  unsetenv(kOutputEnvVar);
  c.env.mode.heterogeneous = true;
  c.env.sem_enabled = false;
  CHECK(default_run_id(c, 1000, "train") == "train-easy-hetero-nosem-seed1000");
}
