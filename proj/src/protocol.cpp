#include "seglab/protocol.hpp"

#include <json.hpp>

namespace seglab::protocol {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

ojson scores_json(const std::map<AgentId, int>& scores) {
    ojson j = ojson::object();
    for (const auto& [id, pts] : scores) j[std::to_string(id)] = pts;
    return j;
}

std::map<AgentId, int> scores_from(const json& j) {
    std::map<AgentId, int> out;
    for (const auto& [k, v] : j.items()) out[std::stoi(k)] = v.get<int>();
    return out;
}

GameKind kind_from(const json& j) {
    auto k = parse_game_kind(j.get<std::string>());
    if (!k) throw ProtocolError("unknown game kind '" + j.get<std::string>() + "'");
    return *k;
}

SessionConfig config_from(const json& j) {
    SessionConfig c;
    if (j.contains("players")) c.expectedPlayers = j.at("players").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("order") && !j.at("order").is_null()) c.orderIndex = j.at("order").get<int>();
    if (j.contains("trialKind")) c.trialKind = kind_from(j.at("trialKind"));
    if (j.contains("gameLengthMs")) c.gameLengthMs = j.at("gameLengthMs").get<std::int64_t>();
    if (j.contains("tables")) {
        for (const auto& [name, bins] : j.at("tables").items()) {
            auto k = parse_game_kind(name);
            if (!k) throw ProtocolError("unknown game kind '" + name + "'");
            c.tables[static_cast<std::size_t>(*k)] = parse_utility_table(json{{"name", name}, {"bins", bins}}.dump());
        }
    }
    return c;
}

ClientFrame admin_from(const json& j) {
    const auto cmd = j.at("cmd").get<std::string>();
    if (cmd == "create") return AdminCreate{config_from(j.value("config", json::object()))};
    if (cmd == "start") {
        AdminStart s;
        s.trial = j.value("trial", false);
        if (j.contains("kind") && !j.at("kind").is_null()) s.kind = kind_from(j.at("kind"));
        return s;
    }
    if (cmd == "stop") return AdminStop{};
    if (cmd == "final") return AdminFinal{};
    throw ProtocolError("unknown admin command '" + cmd + "'");
}

}  // namespace

ClientFrame parse_client_frame(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ProtocolError("frame must be a JSON object");
        const auto t = j.at("t").get<std::string>();
        if (t == "join") {
            Join f{j.at("id").get<int>(), std::nullopt};
            if (j.contains("name") && j.at("name").is_string()) f.name = j.at("name").get<std::string>();
            return f;
        }
        if (t == "move") {
            auto d = parse_direction(j.at("dir").get<std::string>());
            if (!d) throw ProtocolError("unknown direction '" + j.at("dir").get<std::string>() + "'");
            Move f{*d, std::nullopt};
            if (j.contains("ref")) f.ref = j.at("ref").get<std::int64_t>();
            return f;
        }
        if (t == "satisfied") return Satisfied{j.at("v").get<bool>()};
        if (t == "admin") return admin_from(j);
        throw ProtocolError("unknown frame type '" + t + "'");
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("malformed frame: ") + e.what());
    }
}

std::string to_json(const Join& f) {
    ojson j{{"t", "join"}, {"id", f.id}};
    if (f.name) j["name"] = *f.name;
    return j.dump();
}

std::string to_json(const Move& f) {
    ojson j{{"t", "move"}, {"dir", to_string(f.dir)}};
    if (f.ref) j["ref"] = *f.ref;
    return j.dump();
}

std::string to_json(const Satisfied& f) { return ojson{{"t", "satisfied"}, {"v", f.value}}.dump(); }

std::string to_json(const AdminStart& f) {
    ojson j{{"t", "admin"}, {"cmd", "start"}, {"trial", f.trial}};
    if (f.kind) j["kind"] = to_string(*f.kind);
    return j.dump();
}

std::string to_json(const AdminStop&) { return ojson{{"t", "admin"}, {"cmd", "stop"}}.dump(); }
std::string to_json(const AdminFinal&) { return ojson{{"t", "admin"}, {"cmd", "final"}}.dump(); }

std::string to_json(const AdminCreate& f) {
    const SessionConfig& c = f.config;
    ojson cfg;
    cfg["players"] = c.expectedPlayers;
    cfg["seed"] = c.seed;
    cfg["order"] = c.orderIndex ? ojson(*c.orderIndex) : ojson(nullptr);
    cfg["trialKind"] = to_string(c.trialKind);
    cfg["gameLengthMs"] = c.gameLengthMs;
    ojson tables = ojson::object();
    for (GameKind k : kGameKinds) tables[std::string(to_string(k))] = c.table(k).bins();
    cfg["tables"] = std::move(tables);
    return ojson{{"t", "admin"}, {"cmd", "create"}, {"config", std::move(cfg)}}.dump();
}

GridState StateFrame::to_grid() const {
    GridState g;
    for (int r = 0; r < kSide; ++r)
        for (int c = 0; c < kSide; ++c) {
            const int id = grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (id == 0) continue;
            auto it = colors.find(id);
            if (it == colors.end()) throw ProtocolError("no color for agent " + std::to_string(id));
            g.place(id, it->second, {r, c});
        }
    return g;
}

StateFrame make_state(const Session& session, std::int64_t nowMs) {
    StateFrame s;
    s.phase = to_string(session.phase());
    for (AgentId id : session.grid().agents()) {
        const Cell c = session.grid().cell_of(id);
        s.grid[static_cast<std::size_t>(c.row)][static_cast<std::size_t>(c.col)] = id;
    }
    for (const Player& p : session.roster()) s.colors[p.id] = p.color;
    s.scores = session.current_scores();
    s.clockMs = session.clock_ms(nowMs);
    s.game = session.game_number();
    if (auto k = session.current_kind()) s.kind = std::string(to_string(*k));
    s.satisfied = session.satisfied();
    s.seq = session.events().empty() ? 0 : session.events().back().seq;
    return s;
}

std::string to_json(const StateFrame& s) {
    ojson j;
    j["t"] = "state";
    j["phase"] = s.phase;
    j["grid"] = s.grid;
    j["scores"] = scores_json(s.scores);
    j["clockMs"] = s.clockMs;
    j["game"] = s.game;
    j["kind"] = s.kind ? ojson(*s.kind) : ojson(nullptr);
    ojson colors = ojson::object();
    for (const auto& [id, c] : s.colors) colors[std::to_string(id)] = to_string(c);
    j["colors"] = std::move(colors);
    j["satisfied"] = s.satisfied;
    j["seq"] = s.seq;
    return j.dump();
}

StateFrame parse_state(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("t").get<std::string>() != "state") throw ProtocolError("not a state frame");
        StateFrame s;
        s.phase = j.at("phase").get<std::string>();
        const auto& rows = j.at("grid");
        if (!rows.is_array() || rows.size() != kSide) throw ProtocolError("grid must have 6 rows");
        for (std::size_t r = 0; r < kSide; ++r) {
            if (!rows[r].is_array() || rows[r].size() != kSide) throw ProtocolError("grid rows must have 6 cells");
            for (std::size_t c = 0; c < kSide; ++c) s.grid[r][c] = rows[r][c].get<int>();
        }
        s.scores = scores_from(j.at("scores"));
        s.clockMs = j.at("clockMs").get<std::int64_t>();
        s.game = j.value("game", 0);
        if (j.contains("kind") && !j.at("kind").is_null()) s.kind = j.at("kind").get<std::string>();
        if (j.contains("colors"))
            for (const auto& [k, v] : j.at("colors").items()) {
                auto c = parse_color(v.get<std::string>());
                if (!c) throw ProtocolError("bad color");
                s.colors[std::stoi(k)] = *c;
            }
        if (j.contains("satisfied")) s.satisfied = j.at("satisfied").get<std::set<AgentId>>();
        s.seq = j.value("seq", std::uint64_t{0});
        return s;
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("malformed state frame: ") + e.what());
    }
}

std::string game_start_frame(const GameStart& gs) {
    ojson j;
    j["t"] = "gameStart";
    j["kind"] = to_string(gs.kind);
    j["table"] = gs.table.bins();
    j["game"] = gs.number;
    j["trial"] = gs.trial;
    return j.dump();
}

std::string game_end_frame(const GameRecord& record) {
    ojson j;
    j["t"] = "gameEnd";
    j["scores"] = scores_json(record.log.end ? record.log.end->scores : std::map<AgentId, int>{});
    j["game"] = record.number;
    j["kind"] = to_string(record.kind);
    j["trial"] = record.trial;
    if (record.log.end) {
        j["reason"] = record.log.end->reason;
        j["tMs"] = record.log.end->tMs;
    }
    return j.dump();
}

std::string error_frame(std::string_view reason) {
    return ojson{{"t", "error"}, {"reason", std::string(reason)}}.dump();
}

std::string joined_frame(const Player& p) {
    ojson j{{"t", "joined"}, {"id", p.id}, {"color", to_string(p.color)}, {"seat", p.seat}};
    return j.dump();
}

std::string ack_frame(std::int64_t ref, const MoveEvent& e) {
    return ojson{{"t", "ack"}, {"ref", ref}, {"accepted", e.accepted}, {"seq", e.seq}}.dump();
}

std::string final_scores_frame(const std::vector<FinalScore>& scores) {
    ojson list = ojson::array();
    for (const auto& s : scores) list.push_back({{"id", s.id}, {"total", s.total}});
    return ojson{{"t", "finalScores"}, {"scores", std::move(list)}}.dump();
}

std::string frame_type(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("t") || !j.at("t").is_string()) return {};
    return j.at("t").get<std::string>();
}

}  // namespace seglab::protocol
