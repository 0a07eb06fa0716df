#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mergesim/env.hpp"
#include "mergesim/metrics.hpp"
#include "mergesim/replay.hpp"

using namespace mergesim;

namespace {

EpisodeRecord recorded_episode(std::uint64_t seed, TrafficLevel level) {
  EnvConfig cfg;
  cfg.mode.level = level;
  MergingEnv env(cfg);
  env.set_recording(true);
  env.reset(seed, static_cast<int>(seed));
  int step = 0;
  while (!env.done()) {
    std::map<VehicleId, HighLevelAction> a;
    for (VehicleId id : env.live_cav_ids()) a[id] = action_from_index((step * 3 + id) % kNumActions);
    env.step(a);
    ++step;
  }
  return env.record();
}

std::string to_text(const std::vector<EpisodeRecord>& rs) {
  std::ostringstream out;
  for (const auto& r : rs) write_replay(out, r);
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

long error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_replay(in);
  } catch (const ReplayError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("a log reads back to the same episodes and metrics") {
  const std::vector<EpisodeRecord> rs{recorded_episode(1, TrafficLevel::Hard), recorded_episode(2, TrafficLevel::Easy)};
  const std::string text = to_text(rs);
  std::istringstream in(text);
  const auto back = read_replay(in);
  REQUIRE(back.size() == rs.size());
  CHECK(to_text(back) == text);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(back[i].frames.size() == rs[i].frames.size());
    CHECK(back[i].decisions.size() == rs[i].decisions.size());
    CHECK(back[i].cause == rs[i].cause);
    CHECK(back[i].frames.back().vehicles.back().x == rs[i].frames.back().vehicles.back().x);
  }
  const RoadLayout layout = build_layout();
  const auto live = compute_metrics(rs, layout, default_pet_zone(layout));
  const auto replayed = compute_metrics(back, layout, default_pet_zone(layout));
  CHECK(live.collision_rate == replayed.collision_rate);
  CHECK(live.average_speed == replayed.average_speed);
  CHECK(live.mean_reward == replayed.mean_reward);
  CHECK(live.tms.tms == replayed.tms.tms);
}

TEST_CASE("correction counts survive the round trip") {
  std::vector<EpisodeRecord> rs;
  int corrections = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    rs.push_back(recorded_episode(seed, TrafficLevel::Hard));
    corrections += summarize(rs.back()).corrections;
  }
  REQUIRE(corrections > 0);
  std::istringstream in(to_text(rs));
  int replayed = 0;
  for (const auto& r : read_replay(in)) replayed += summarize(r).corrections;
  CHECK(replayed == corrections);
}

TEST_CASE("truncated and corrupt logs name the first bad line") {
  const std::string text = to_text({recorded_episode(3, TrafficLevel::Easy)});
  const auto lines = lines_of(text);
  REQUIRE(lines.size() > 10);

  std::string cut;
  for (std::size_t i = 0; i < 6; ++i) cut += lines[i] + "\n";
  cut += lines[6].substr(0, lines[6].size() / 2) + "\n";
  CHECK(error_line(cut) == 7);

  std::string no_end;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) no_end += lines[i] + "\n";
  CHECK(error_line(no_end) == static_cast<long>(lines.size()));

  std::string bad_field = text;
  const auto pos = bad_field.find("\"kind\":\"cav\"");
  REQUIRE(pos != std::string::npos);
  bad_field.replace(pos, 12, "\"kind\":\"bus\"");
  long expect = 0;
  for (std::size_t i = 0, off = 0; i < lines.size(); off += lines[i].size() + 1, ++i) {
    if (off + lines[i].size() >= pos) {
      expect = static_cast<long>(i) + 1;
      break;
    }
  }
  CHECK(error_line(bad_field) == expect);
  CHECK(error_line("{\"type\":\"state\"}\n") == 1);
  CHECK(error_line("not json\n") == 1);
}
