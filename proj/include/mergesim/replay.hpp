#ifndef MERGESIM_REPLAY_HPP_
#define MERGESIM_REPLAY_HPP_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "mergesim/record.hpp"

namespace mergesim {

// JSON-lines episode log. One object per line, tagged by "type":
//   episode_begin, state (one per vehicle per frame), decision, intent,
//   conflict, correction, episode_end.
// Doubles are written in shortest round-trip form so that a parsed log
// reproduces the recorded episode bit for bit.
void write_replay(std::ostream& out, const EpisodeRecord& record);
void write_replay(const std::filesystem::path& path, std::span<const EpisodeRecord> records);

class ReplayError : public std::runtime_error {
 public:
  ReplayError(long line, const std::string& what);
  long line() const { return line_; }

 private:
  long line_;
};

// Throws ReplayError naming the first offending line (a missing
// episode_end is reported at the line after the last one).
std::vector<EpisodeRecord> read_replay(std::istream& in);
std::vector<EpisodeRecord> read_replay(const std::filesystem::path& path);

}  // namespace mergesim

#endif  // MERGESIM_REPLAY_HPP_
