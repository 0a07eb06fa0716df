#include "mergesim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace mergesim {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double collision_rate(std::span<const EpisodeRecord> records) {
  if (records.empty()) throw std::invalid_argument("collision_rate: no records");
  long steps = 0;
  long hits = 0;
  for (const auto& r : records) {
    steps += static_cast<long>(r.decisions.size());
    for (const auto& d : r.decisions) hits += d.collision ? 1 : 0;
  }
  if (steps == 0) throw std::invalid_argument("collision_rate: no decision steps");
  return static_cast<double>(hits) / static_cast<double>(steps);
}

double average_speed(std::span<const EpisodeRecord> records) {
  double sum = 0.0;
  long n = 0;
  for (const auto& r : records) {
    for (std::size_t f = 1; f < r.frames.size(); ++f) {
      for (const auto& v : r.frames[f].vehicles) {
        if (v.kind != VehicleKind::CAV) continue;
        sum += v.v;
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("average_speed: no CAV substeps");
  return sum / static_cast<double>(n);
}

double episode_reward(const EpisodeRecord& record) {
  if (record.frames.empty()) return 0.0;
  const auto& first = record.frames.front().vehicles;
  const auto n_cav = std::count_if(first.begin(), first.end(),
                                   [](const VehicleState& v) { return v.kind == VehicleKind::CAV; });
  if (n_cav == 0) return 0.0;
  double total = 0.0;
  for (const auto& d : record.decisions) {
    for (const auto& a : d.agents) total += a.reward.total;
  }
  return total / static_cast<double>(n_cav);
}

PetZone default_pet_zone(const RoadLayout& layout) {
  return {layout.merge_end() - 10.0, layout.merge_end() + 10.0};
}

namespace {

// Interpolated time at which x passes `bound` moving forward, if it does.
std::optional<double> crossing(double x0, double t0, double x1, double t1, double bound) {
  if (!(x0 < bound && bound <= x1)) return std::nullopt;
  return t0 + (bound - x0) / (x1 - x0) * (t1 - t0);
}

}  // namespace

std::vector<Traversal> zone_traversals(const EpisodeRecord& record, const PetZone& zone) {
  struct Track {
    double x = 0.0;
    double t = 0.0;
    std::optional<double> entry;
    std::optional<double> exit;
  };
  std::map<VehicleId, Track> tracks;
  for (const auto& frame : record.frames) {
    for (const auto& v : frame.vehicles) {
      if (v.kind == VehicleKind::Obstacle) continue;
      auto it = tracks.find(v.id);
      if (it == tracks.end()) {
        tracks[v.id] = {v.x, frame.t, std::nullopt, std::nullopt};
        continue;
      }
      Track& tr = it->second;
      if (!tr.entry) tr.entry = crossing(tr.x, tr.t, v.x, frame.t, zone.x_min);
      if (tr.entry && !tr.exit) tr.exit = crossing(tr.x, tr.t, v.x, frame.t, zone.x_max);
      tr.x = v.x;
      tr.t = frame.t;
    }
  }
  std::vector<Traversal> out;
  for (const auto& [id, tr] : tracks) {
    if (tr.entry && tr.exit) out.push_back({id, *tr.entry, *tr.exit});
  }
  std::sort(out.begin(), out.end(), [](const Traversal& a, const Traversal& b) {
    return a.entry != b.entry ? a.entry < b.entry : a.id < b.id;
  });
  return out;
}

std::vector<PetEvent> pet(std::span<const EpisodeRecord> records, const PetZone& zone) {
  std::vector<PetEvent> out;
  for (const auto& r : records) {
    const auto tr = zone_traversals(r, zone);
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const double gap = tr[i].entry - tr[i - 1].exit;
      if (gap >= 0.0) out.push_back({r.episode, tr[i - 1].id, tr[i].id, gap});
    }
  }
  return out;
}

TmsGrid coil_tms(std::span<const EpisodeRecord> records, std::span<const double> coils,
                 int window_steps) {
  if (window_steps < 1) throw std::invalid_argument("coil_tms: window must be >= 1 decision step");
  TmsGrid grid;
  grid.coils.assign(coils.begin(), coils.end());
  std::size_t windows = 0;
  for (const auto& r : records) {
    const std::size_t per = static_cast<std::size_t>(window_steps * r.substeps_per_decision);
    const std::size_t substeps = r.frames.empty() ? 0 : r.frames.size() - 1;
    windows = std::max(windows, (substeps + per - 1) / per);
    grid.window_seconds = window_steps * r.substeps_per_decision * r.dt;
  }
  std::vector<std::vector<double>> sum(coils.size(), std::vector<double>(windows, 0.0));
  std::vector<std::vector<int>> count(coils.size(), std::vector<int>(windows, 0));

  for (const auto& r : records) {
    const std::size_t per = static_cast<std::size_t>(window_steps * r.substeps_per_decision);
    std::map<VehicleId, double> front;
    if (!r.frames.empty()) {
      for (const auto& v : r.frames.front().vehicles) front[v.id] = v.x + v.length / 2.0;
    }
    for (std::size_t f = 1; f < r.frames.size(); ++f) {
      const std::size_t w = (f - 1) / per;
      for (const auto& v : r.frames[f].vehicles) {
        if (v.kind == VehicleKind::Obstacle) continue;
        const double now = v.x + v.length / 2.0;
        const auto it = front.find(v.id);
        if (it != front.end()) {
          for (std::size_t c = 0; c < coils.size(); ++c) {
            if (it->second < coils[c] && coils[c] <= now) {
              sum[c][w] += v.v;
              ++count[c][w];
            }
          }
        }
        front[v.id] = now;
      }
    }
  }

  grid.tms.assign(coils.size(), std::vector<std::optional<double>>(windows));
  grid.breakdown.assign(coils.size(), std::vector<bool>(windows, false));
  for (std::size_t c = 0; c < coils.size(); ++c) {
    for (std::size_t w = 0; w < windows; ++w) {
      if (count[c][w] == 0) continue;
      const double m = sum[c][w] / count[c][w];
      grid.tms[c][w] = m;
      grid.breakdown[c][w] = m < kBreakdownSpeed;
    }
  }
  return grid;
}

EpisodeSummary summarize(const EpisodeRecord& record) {
  EpisodeSummary s;
  s.episode = record.episode;
  s.seed = record.seed;
  s.steps = static_cast<int>(record.decisions.size());
  s.reward = episode_reward(record);
  s.cause = record.cause;
  for (const auto& d : record.decisions) {
    s.collision_steps += d.collision ? 1 : 0;
    s.conflicts += static_cast<int>(d.conflicts.size());
    s.corrections += static_cast<int>(d.corrections.size());
    for (const auto& c : d.corrections) s.unresolved += c.resolved ? 0 : 1;
  }
  return s;
}

MetricsReport compute_metrics(std::span<const EpisodeRecord> records, const RoadLayout& layout,
                              const PetZone& zone, int window_steps) {
  MetricsReport m;
  m.episodes = static_cast<int>(records.size());
  m.collision_rate = collision_rate(records);
  m.average_speed = average_speed(records);
  double total = 0.0;
  for (const auto& r : records) {
    m.per_episode.push_back(summarize(r));
    total += m.per_episode.back().reward;
  }
  m.mean_reward = total / static_cast<double>(records.size());
  m.pet = pet(records, zone);
  m.tms = coil_tms(records, layout.coil_positions(), window_steps);
  return m;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_metrics(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  int breakdowns = 0;
  for (const auto& row : report.tms.breakdown) breakdowns += static_cast<int>(std::count(row.begin(), row.end(), true));
  double pet_mean = 0.0;
  for (const auto& e : report.pet) pet_mean += e.value;
  if (!report.pet.empty()) pet_mean /= static_cast<double>(report.pet.size());

  {
    auto out = open_csv(dir / "summary.csv");
    out << "episodes,collision_rate,average_speed,mean_reward,pet_count,pet_mean,breakdown_cells\n";
    out << report.episodes << ',' << format_double(report.collision_rate) << ','
        << format_double(report.average_speed) << ',' << format_double(report.mean_reward) << ','
        << report.pet.size() << ',' << format_double(pet_mean) << ',' << breakdowns << '\n';
  }
  {
    auto out = open_csv(dir / "episodes.csv");
    out << "episode,seed,steps,collision_steps,reward,conflicts,corrections,unresolved,cause\n";
    for (const auto& e : report.per_episode) {
      out << e.episode << ',' << e.seed << ',' << e.steps << ',' << e.collision_steps << ','
          << format_double(e.reward) << ',' << e.conflicts << ',' << e.corrections << ','
          << e.unresolved << ',' << to_string(e.cause) << '\n';
    }
  }
  {
    auto out = open_csv(dir / "pet.csv");
    out << "episode,first,second,pet\n";
    for (const auto& e : report.pet) {
      out << e.episode << ',' << e.first << ',' << e.second << ',' << format_double(e.value) << '\n';
    }
  }
  {
    auto out = open_csv(dir / "tms.csv");
    out << "coil";
    for (std::size_t w = 0; w < report.tms.windows(); ++w) out << ",w" << w;
    out << '\n';
    for (std::size_t c = 0; c < report.tms.coils.size(); ++c) {
      out << format_double(report.tms.coils[c]);
      for (std::size_t w = 0; w < report.tms.windows(); ++w) {
        const auto& cell = report.tms.tms[c][w];
        out << ',' << (cell ? format_double(*cell) + (report.tms.breakdown[c][w] ? "*" : "") : "");
      }
      out << '\n';
    }
  }
}

}  // namespace mergesim
