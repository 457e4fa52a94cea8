// protocol.hpp - JSON frames exchanged between clients and the game server.
//
// Client -> server
//   {"t":"join","id":N[,"name":"..."]}
//   {"t":"move","dir":"up|down|left|right"[,"ref":N]}
//   {"t":"satisfied","v":true|false}
//   {"t":"admin","cmd":"create|start|stop|final", ...}        admin role only
// Server -> client
//   {"t":"state", ...}  {"t":"gameStart", ...}  {"t":"gameEnd", ...}  {"t":"error","reason":"..."}
//   {"t":"joined", ...} {"t":"ack", ...}        {"t":"finalScores", ...}
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seglab/session.hpp"

namespace seglab::protocol {

struct Join {
    int id = 0;
    std::optional<std::string> name;
};

struct Move {
    Direction dir = Direction::Up;
    std::optional<std::int64_t> ref;  ///< echoed back in the ack
};

struct Satisfied {
    bool value = false;
};

struct AdminCreate {
    SessionConfig config;  ///< sessionId is filled in by the server
};

struct AdminStart {
    bool trial = false;
    std::optional<GameKind> kind;
};

struct AdminStop {};
struct AdminFinal {};

using ClientFrame = std::variant<Join, Move, Satisfied, AdminCreate, AdminStart, AdminStop, AdminFinal>;

/// Throws ProtocolError with a reason suitable for an error frame.
ClientFrame parse_client_frame(std::string_view text);

std::string to_json(const Join& f);
std::string to_json(const Move& f);
std::string to_json(const Satisfied& f);
std::string to_json(const AdminStart& f);
std::string to_json(const AdminStop& f);
std::string to_json(const AdminFinal& f);
/// Only the fields the server reads: players, seed, order, trialKind, gameLengthMs, tables.
std::string to_json(const AdminCreate& f);

/// Full snapshot of a session as broadcast to every client.
struct StateFrame {
    std::string phase;
    /// grid[row][col]: agent id, 0 = empty.
    std::array<std::array<int, kSide>, kSide> grid{};
    std::map<AgentId, int> scores;
    std::int64_t clockMs = 0;
    int game = 0;
    std::optional<std::string> kind;
    std::map<AgentId, Color> colors;
    std::set<AgentId> satisfied;
    /// Number of logged moves in the current game; lets a client match a state to its ack.
    std::uint64_t seq = 0;

    GridState to_grid() const;
    friend bool operator==(const StateFrame&, const StateFrame&) = default;
};

StateFrame make_state(const Session& session, std::int64_t nowMs);
std::string to_json(const StateFrame& s);
/// Throws ProtocolError.
StateFrame parse_state(std::string_view text);

std::string game_start_frame(const GameStart& gs);
std::string game_end_frame(const GameRecord& record);
std::string error_frame(std::string_view reason);
std::string joined_frame(const Player& p);
std::string ack_frame(std::int64_t ref, const MoveEvent& e);
std::string final_scores_frame(const std::vector<FinalScore>& scores);

/// Value of "t" in a server frame, or empty if it has none.
std::string frame_type(std::string_view text);

}  // namespace seglab::protocol
