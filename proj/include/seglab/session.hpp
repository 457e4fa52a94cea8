// session.hpp - experiment lifecycle for one classroom session.
//
// Lobby -> [TrialRun -> Intermission]* -> Game 1 -> Intermission -> ... -> Game 4
//       -> Intermission -> FinalScores
//
// A Session does no I/O and owns no clock: every mutating call takes the
// server time in milliseconds. Callers must serialize access (single writer).
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seglab/event_log.hpp"
#include "seglab/grid.hpp"
#include "seglab/utility_table.hpp"

namespace seglab {

/// A request the session refuses in its current state (carries the reason sent to the client).
class SessionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A message that references something that does not exist (e.g. an unknown agent).
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Phase { Lobby, TrialRun, Game, Intermission, FinalScores };

/// "lobby", "trial", "game", "intermission", "final".
std::string_view to_string(Phase p) noexcept;

inline constexpr std::int64_t kGameLengthMs = 120'000;
inline constexpr int kMinPlayers = 13;
inline constexpr int kMaxPlayers = 36;
inline constexpr int kGamesPerSession = 4;

using GameOrder = std::array<GameKind, 4>;

/// The 24 orders in lexicographic order of (Same, Diverse, SameAndDiverse, SameOrDifferent).
const std::array<GameOrder, 24>& all_game_orders();

struct SessionConfig {
    std::string sessionId = "default";
    int expectedPlayers = 20;
    std::uint64_t seed = 0;
    /// Index into all_game_orders(); drawn from the seed when absent.
    std::optional<int> orderIndex;
    GameKind trialKind = GameKind::Same;
    std::array<UtilityTable, 4> tables{UtilityTable::preset(GameKind::Same), UtilityTable::preset(GameKind::Diverse),
                                       UtilityTable::preset(GameKind::SameAndDiverse),
                                       UtilityTable::preset(GameKind::SameOrDifferent)};
    std::int64_t gameLengthMs = kGameLengthMs;

    const UtilityTable& table(GameKind k) const { return tables[static_cast<std::size_t>(k)]; }
    std::string to_json() const;
};

struct Player {
    AgentId id = 0;
    Color color = Color::Yellow;
    int seat = 0;
    std::optional<std::string> name;
};

struct GameStart {
    int number = 0;  ///< 0 for a trial run
    GameKind kind = GameKind::Same;
    bool trial = false;
    UtilityTable table = UtilityTable::preset(GameKind::Same);
};

struct GameRecord {
    int number = 0;
    GameKind kind = GameKind::Same;
    bool trial = false;
    GameLog log;  ///< header, every in-game move, end line
};

struct MoveOutcome {
    MoveEvent event;
    /// False when no game was running; such events are not part of any log.
    bool logged = false;
    /// Set if the game had already run out of time when the move arrived.
    std::optional<GameRecord> expired;
};

struct FinalScore {
    AgentId id = 0;
    int total = 0;
};

class Session {
public:
    /// Throws SessionError when expectedPlayers is outside 13..36 or the config is otherwise invalid.
    static Session create(SessionConfig config);

    /// Seats login id `loginId` on cell loginId-1. Lobby only.
    const Player& join(int loginId, std::optional<std::string> name = std::nullopt);

    /// Starts the trial run (only before game 1) or the next game in the order.
    /// `kind`, if given, must match what is due next.
    GameStart start_game(bool trial, std::optional<GameKind> kind, std::int64_t nowMs);

    MoveOutcome handle_move(AgentId agent, Direction dir, std::int64_t nowMs);

    /// Returns the finished game if this toggle made everyone satisfied (or time had run out).
    std::optional<GameRecord> set_satisfied(AgentId agent, bool flag, std::int64_t nowMs);

    /// Ends the running game if its time is up.
    std::optional<GameRecord> tick(std::int64_t nowMs);

    /// Ends the running game now.
    GameRecord end_game(std::int64_t nowMs, std::string reason = "stopped");

    /// Totals over the four scored games, highest first, ties in join order.
    std::vector<FinalScore> final_scores() const;
    /// Moves an Intermission after game 4 to FinalScores.
    void show_final_scores();

    const SessionConfig& config() const noexcept { return config_; }
    const std::string& id() const noexcept { return config_.sessionId; }
    Phase phase() const noexcept { return phase_; }
    bool running() const noexcept { return phase_ == Phase::TrialRun || phase_ == Phase::Game; }
    const GameOrder& game_order() const noexcept { return order_; }
    int order_index() const noexcept { return orderIndex_; }
    int games_played() const noexcept { return gamesPlayed_; }
    /// Current (or last) game's number, 0 for the trial run.
    int game_number() const noexcept { return gameNumber_; }
    std::optional<GameKind> current_kind() const noexcept { return kind_; }
    const UtilityTable& current_table() const;
    const GridState& grid() const noexcept { return grid_; }
    /// Elapsed game time, capped at the game length; 0 outside games.
    std::int64_t clock_ms(std::int64_t nowMs) const noexcept;
    const std::set<AgentId>& satisfied() const noexcept { return satisfied_; }
    const std::map<AgentId, int>& cumulative_scores() const noexcept { return cumulative_; }
    /// Live scores during a game, end scores after it.
    std::map<AgentId, int> current_scores() const;
    const std::vector<Player>& roster() const noexcept { return roster_; }
    std::optional<Player> player(AgentId id) const;
    /// Events of the running (or last) game.
    const std::vector<MoveEvent>& events() const noexcept { return current_.log.events; }
    const LogHeader& header() const noexcept { return current_.log.header; }

private:
    explicit Session(SessionConfig config);

    GridState seated_grid() const;
    void require_player(AgentId agent) const;

    SessionConfig config_;
    GameOrder order_{};
    int orderIndex_ = 0;
    Color firstColor_ = Color::Yellow;
    Phase phase_ = Phase::Lobby;
    std::vector<Player> roster_;  ///< join order
    GridState grid_;
    std::optional<GameKind> kind_;
    int gamesPlayed_ = 0;
    int gameNumber_ = 0;
    std::int64_t startMs_ = 0;
    std::uint64_t seq_ = 0;
    std::set<AgentId> satisfied_;
    std::map<AgentId, int> cumulative_;
    std::optional<std::map<AgentId, int>> endScores_;
    GameRecord current_;
};

}  // namespace seglab
