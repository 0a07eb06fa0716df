#include "mergesim/replay.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

namespace mergesim {

using nlohmann::json;

namespace {

json reward_json(const RewardTerms& r) {
  return {{"collision", r.collision}, {"speed", r.speed}, {"headway", r.headway},
          {"merging", r.merging}, {"total", r.total}};
}

RewardTerms reward_from(const json& j) {
  return {j.at("collision").get<double>(), j.at("speed").get<double>(), j.at("headway").get<double>(),
          j.at("merging").get<double>(), j.at("total").get<double>()};
}

void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

}  // namespace

void write_replay(std::ostream& out, const EpisodeRecord& r) {
  const int ep = r.episode;
  json times = json::array();
  for (const auto& fr : r.frames) times.push_back(fr.t);
  emit(out, {{"type", "episode_begin"}, {"ep", ep}, {"seed", r.seed}, {"dt", r.dt},
             {"substeps", r.substeps_per_decision}, {"times", times}});
  for (std::size_t f = 0; f < r.frames.size(); ++f) {
    const Frame& fr = r.frames[f];
    for (const auto& v : fr.vehicles) {
      emit(out, {{"type", "state"}, {"ep", ep}, {"f", f}, {"t", fr.t}, {"id", v.id},
                 {"kind", to_string(v.kind)}, {"style", to_string(v.style)}, {"x", v.x}, {"y", v.y},
                 {"v", v.v}, {"theta", v.heading}, {"lane", to_string(v.lane.kind)},
                 {"lane_index", v.lane.index}, {"length", v.length}, {"width", v.width}});
    }
  }
  for (const auto& d : r.decisions) {
    json agents = json::array();
    for (const auto& a : d.agents) {
      agents.push_back({{"id", a.id}, {"proposed", to_string(a.proposed)},
                        {"executed", to_string(a.executed)}, {"reward", reward_json(a.reward)}});
    }
    emit(out, {{"type", "decision"}, {"ep", ep}, {"step", d.step}, {"collision", d.collision},
               {"agents", agents}});
    for (const auto& it : d.intents) {
      json samples = json::array();
      for (const auto& s : it.samples) samples.push_back({s.x, s.y, s.v, s.heading});
      emit(out, {{"type", "intent"}, {"ep", ep}, {"step", d.step}, {"owner", it.owner},
                 {"created_at", it.created_at}, {"length", it.length}, {"width", it.width},
                 {"samples", samples}});
    }
    for (const auto& c : d.conflicts) {
      emit(out, {{"type", "conflict"}, {"ep", ep}, {"step", d.step}, {"first", c.first},
                 {"second", c.second}, {"k", c.step}, {"min_distance", c.min_distance}});
    }
    for (const auto& c : d.corrections) {
      emit(out, {{"type", "correction"}, {"ep", ep}, {"step", d.step}, {"id", c.id},
                 {"from", to_string(c.from)}, {"to", to_string(c.to)}, {"resolved", c.resolved}});
    }
  }
  emit(out, {{"type", "episode_end"}, {"ep", ep}, {"cause", to_string(r.cause)}});
}

void write_replay(const std::filesystem::path& path, std::span<const EpisodeRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) write_replay(out, r);
}

ReplayError::ReplayError(long line, const std::string& what)
    : std::runtime_error("replay line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<EpisodeRecord> read_replay(std::istream& in) {
  std::vector<EpisodeRecord> out;
  EpisodeRecord* cur = nullptr;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "episode_begin") {
        if (cur) throw std::runtime_error("episode_begin inside an open episode");
        out.emplace_back();
        cur = &out.back();
        cur->episode = j.at("ep").get<int>();
        cur->seed = j.at("seed").get<std::uint64_t>();
        cur->dt = j.at("dt").get<double>();
        cur->substeps_per_decision = j.at("substeps").get<int>();
        for (const auto& t : j.at("times")) cur->frames.push_back({t.get<double>(), {}});
        continue;
      }
      if (!cur) throw std::runtime_error("'" + type + "' record outside an episode");
      if (j.at("ep").get<int>() != cur->episode) throw std::runtime_error("episode index mismatch");

      if (type == "state") {
        const auto f = j.at("f").get<std::size_t>();
        if (f >= cur->frames.size()) throw std::runtime_error("frame index out of range");
        VehicleState v;
        v.id = j.at("id").get<int>();
        v.kind = vehicle_kind_from_string(j.at("kind").get<std::string>());
        v.style = driving_style_from_string(j.at("style").get<std::string>());
        v.x = j.at("x").get<double>();
        v.y = j.at("y").get<double>();
        v.v = j.at("v").get<double>();
        v.heading = j.at("theta").get<double>();
        v.lane = {lane_kind_from_string(j.at("lane").get<std::string>()), j.at("lane_index").get<int>()};
        v.length = j.at("length").get<double>();
        v.width = j.at("width").get<double>();
        cur->frames[f].vehicles.push_back(v);
      } else if (type == "decision") {
        DecisionRecord d;
        d.step = j.at("step").get<int>();
        d.collision = j.at("collision").get<bool>();
        for (const auto& a : j.at("agents")) {
          d.agents.push_back({a.at("id").get<int>(), action_from_string(a.at("proposed").get<std::string>()),
                              action_from_string(a.at("executed").get<std::string>()),
                              reward_from(a.at("reward"))});
        }
        cur->decisions.push_back(std::move(d));
      } else if (type == "intent" || type == "conflict" || type == "correction") {
        if (cur->decisions.empty() || cur->decisions.back().step != j.at("step").get<int>()) {
          throw std::runtime_error("'" + type + "' record without its decision");
        }
        DecisionRecord& d = cur->decisions.back();
        if (type == "intent") {
          IntentTrajectory it;
          it.owner = j.at("owner").get<int>();
          it.created_at = j.at("created_at").get<int>();
          it.length = j.at("length").get<double>();
          it.width = j.at("width").get<double>();
          for (const auto& s : j.at("samples")) {
            it.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>(),
                                  s.at(3).get<double>()});
          }
          d.intents.push_back(std::move(it));
        } else if (type == "conflict") {
          d.conflicts.push_back({j.at("first").get<int>(), j.at("second").get<int>(), j.at("k").get<int>(),
                                 j.at("min_distance").get<double>()});
        } else {
          d.corrections.push_back({j.at("id").get<int>(), action_from_string(j.at("from").get<std::string>()),
                                   action_from_string(j.at("to").get<std::string>()),
                                   j.at("resolved").get<bool>()});
        }
      } else if (type == "episode_end") {
        cur->cause = terminal_cause_from_string(j.at("cause").get<std::string>());
        cur = nullptr;
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const ReplayError&) {
      throw;
    } catch (const std::exception& e) {
      throw ReplayError(n, e.what());
    }
  }
  if (cur) throw ReplayError(n + 1, "log ends inside episode " + std::to_string(cur->episode));
  return out;
}

std::vector<EpisodeRecord> read_replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_replay(in);
}

}  // namespace mergesim
