// event_log.hpp - append-only JSONL game logs and their replay.
//
// A log is one file per game:
//   line 1      {"t":"header", ...}   session config, roster with starting cells, table, seed
//   lines 2..   {"t":"move", ...}     one MoveEvent per line, in (tMs, seq) order
//   last line   {"t":"end", ...}      game duration and end-of-game scores (absent if the
//                                     process died mid-game)
#pragma once

#include <cstdint>
#include <filesystem>
#include <cstdio>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seglab/grid.hpp"
#include "seglab/utility_table.hpp"

namespace seglab {

inline constexpr int kLogVersion = 1;

struct MoveEvent {
    std::uint64_t seq = 0;
    std::int64_t tMs = 0;
    AgentId agent = 0;
    Direction dir = Direction::Up;
    Cell from{};
    Cell to{};  ///< equals `from` for rejected moves
    bool accepted = false;
    int scoreAfter = 0;

    friend bool operator==(const MoveEvent&, const MoveEvent&) = default;
};

struct RosterEntry {
    AgentId id = 0;
    Color color = Color::Yellow;
    std::optional<int> seat;  ///< classroom seat index, service logs only
    Cell cell{};              ///< starting cell for this game

    friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct LogHeader {
    int version = kLogVersion;
    std::string source = "service";  ///< "service" or "simulation"
    std::string session;
    int game = 0;  ///< 0 for the trial run, 1..4 for scored games
    bool trial = false;
    UtilityTable table = UtilityTable::preset(GameKind::Same);
    std::uint64_t seed = 0;
    std::vector<RosterEntry> roster;
    std::string configJson = "{}";  ///< free-form session config, kept verbatim
};

struct GameEnd {
    std::int64_t tMs = 0;
    std::string reason;  ///< "timeout", "satisfied", "stopped", "periods"
    std::map<AgentId, int> scores;
};

struct GameLog {
    LogHeader header;
    std::vector<MoveEvent> events;
    std::optional<GameEnd> end;

    /// End line's time, else the last event's, else 0.
    std::int64_t duration_ms() const noexcept;
};

/// Malformed line; `line` is 1-based.
class LogFormatError : public std::runtime_error {
public:
    LogFormatError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Event inconsistent with the movement rules or with the state replayed so far.
class ReplayError : public std::runtime_error {
public:
    ReplayError(std::size_t eventIndex, const std::string& what);
    std::size_t event_index() const noexcept { return index_; }
    /// 1-based line in the log file (header is line 1).
    std::size_t line() const noexcept { return index_ + 2; }

private:
    std::size_t index_;
};

std::string to_jsonl(const LogHeader& header);
std::string to_jsonl(const MoveEvent& event);
std::string to_jsonl(const GameEnd& end);

GameLog parse_game_log(std::istream& in);
GameLog read_game_log(const std::filesystem::path& path);

GridState initial_grid(const LogHeader& header);

/// Validates and applies events one at a time on top of a header's starting grid.
class Replayer {
public:
    explicit Replayer(const LogHeader& header);

    /// Throws ReplayError if the event does not follow from the current state.
    void apply(const MoveEvent& event, std::size_t index);

    const GridState& grid() const noexcept { return grid_; }
    const UtilityTable& table() const noexcept { return table_; }
    std::int64_t last_time() const noexcept { return lastMs_; }

private:
    GridState grid_;
    UtilityTable table_;
    std::int64_t lastMs_ = 0;
    std::optional<std::uint64_t> lastSeq_;
};

struct ReplayResult {
    GridState finalGrid;
    std::map<AgentId, int> scores;
};

/// Full replay; also checks the end line's scores against the replayed board.
ReplayResult replay(const GameLog& log);

/// Current score of every agent on the board.
std::map<AgentId, int> scores_of(const GridState& grid, const UtilityTable& table);

/// Line-buffered writer for one game's log. Never overwrites an existing file.
class GameLogWriter {
public:
    /// Creates `path` exclusively; throws std::runtime_error if it exists.
    explicit GameLogWriter(const std::filesystem::path& path);

    void header(const LogHeader& h) { line(to_jsonl(h)); }
    void event(const MoveEvent& e) { line(to_jsonl(e)); }
    void end(const GameEnd& e) { line(to_jsonl(e)); }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void line(const std::string& text);

    struct Closer {
        void operator()(std::FILE* f) const noexcept { std::fclose(f); }
    };

    std::filesystem::path path_;
    std::unique_ptr<std::FILE, Closer> file_;
};

}  // namespace seglab
