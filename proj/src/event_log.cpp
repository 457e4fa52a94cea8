#include "seglab/event_log.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>

#include <json.hpp>

namespace seglab {

using ojson = nlohmann::ordered_json;

std::int64_t GameLog::duration_ms() const noexcept {
    if (end) return end->tMs;
    if (!events.empty()) return events.back().tMs;
    return 0;
}

LogFormatError::LogFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

ReplayError::ReplayError(std::size_t eventIndex, const std::string& what)
    : std::runtime_error("line " + std::to_string(eventIndex + 2) + ": " + what), index_(eventIndex) {}

namespace {

ojson cell_json(Cell c) { return ojson::array({c.row, c.col}); }

Cell cell_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw std::invalid_argument("cell must be [row, col]");
    Cell c{j[0].get<int>(), j[1].get<int>()};
    if (!c.on_board()) throw std::invalid_argument("cell off the board");
    return c;
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return j.at(key).get<T>();
}

ojson scores_json(const std::map<AgentId, int>& scores) {
    ojson out = ojson::object();
    for (const auto& [id, pts] : scores) out[std::to_string(id)] = pts;
    return out;
}

std::map<AgentId, int> scores_from(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("scores must be an object");
    std::map<AgentId, int> out;
    for (const auto& [key, value] : j.items()) out[std::stoi(key)] = value.get<int>();
    return out;
}

LogHeader header_from(const nlohmann::json& j) {
    if (field<std::string>(j, "t") != "header") throw std::invalid_argument("first line must be the header");
    LogHeader h;
    h.version = field<int>(j, "version");
    if (h.version != kLogVersion) throw std::invalid_argument("unsupported log version " + std::to_string(h.version));
    h.source = field<std::string>(j, "source");
    h.session = field<std::string>(j, "session");
    h.game = field<int>(j, "game");
    h.trial = field<bool>(j, "trial");
    const auto bins = field<std::vector<int>>(j, "table");
    if (bins.size() != kBins) throw std::invalid_argument("table must have 11 bins");
    UtilityTable::Bins b{};
    std::copy(bins.begin(), bins.end(), b.begin());
    h.table = UtilityTable(field<std::string>(j, "kind"), b);
    h.seed = field<std::uint64_t>(j, "seed");
    for (const auto& r : j.at("roster")) {
        RosterEntry e;
        e.id = field<int>(r, "id");
        const auto color = parse_color(field<std::string>(r, "color"));
        if (!color) throw std::invalid_argument("bad color");
        e.color = *color;
        if (r.contains("seat") && !r["seat"].is_null()) e.seat = r["seat"].get<int>();
        e.cell = cell_from(r.at("cell"));
        h.roster.push_back(e);
    }
    if (j.contains("config")) h.configJson = j["config"].dump();
    return h;
}

MoveEvent event_from(const nlohmann::json& j) {
    MoveEvent e;
    e.seq = field<std::uint64_t>(j, "seq");
    e.tMs = field<std::int64_t>(j, "tMs");
    e.agent = field<int>(j, "agent");
    const auto dir = parse_direction(field<std::string>(j, "dir"));
    if (!dir) throw std::invalid_argument("bad direction");
    e.dir = *dir;
    e.from = cell_from(j.at("from"));
    e.to = cell_from(j.at("to"));
    e.accepted = field<bool>(j, "accepted");
    e.scoreAfter = field<int>(j, "scoreAfter");
    return e;
}

GameEnd end_from(const nlohmann::json& j) {
    GameEnd e;
    e.tMs = field<std::int64_t>(j, "tMs");
    e.reason = field<std::string>(j, "reason");
    e.scores = scores_from(j.at("scores"));
    return e;
}

}  // namespace

std::string to_jsonl(const LogHeader& h) {
    ojson roster = ojson::array();
    for (const auto& r : h.roster) {
        ojson e{{"id", r.id}, {"color", to_string(r.color)}};
        e["seat"] = r.seat ? ojson(*r.seat) : ojson(nullptr);
        e["cell"] = cell_json(r.cell);
        roster.push_back(std::move(e));
    }
    ojson j;
    j["t"] = "header";
    j["version"] = h.version;
    j["source"] = h.source;
    j["session"] = h.session;
    j["game"] = h.game;
    j["trial"] = h.trial;
    j["kind"] = h.table.name();
    j["table"] = h.table.bins();
    j["seed"] = h.seed;
    j["roster"] = std::move(roster);
    j["config"] = ojson::parse(h.configJson);
    return j.dump();
}

std::string to_jsonl(const MoveEvent& e) {
    ojson j;
    j["t"] = "move";
    j["seq"] = e.seq;
    j["tMs"] = e.tMs;
    j["agent"] = e.agent;
    j["dir"] = to_string(e.dir);
    j["from"] = cell_json(e.from);
    j["to"] = cell_json(e.to);
    j["accepted"] = e.accepted;
    j["scoreAfter"] = e.scoreAfter;
    return j.dump();
}

std::string to_jsonl(const GameEnd& e) {
    ojson j;
    j["t"] = "end";
    j["tMs"] = e.tMs;
    j["reason"] = e.reason;
    j["scores"] = scores_json(e.scores);
    return j.dump();
}

GameLog parse_game_log(std::istream& in) {
    GameLog log;
    std::string text;
    std::size_t lineNo = 0;
    bool sawHeader = false;
    while (std::getline(in, text)) {
        ++lineNo;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (log.end) throw LogFormatError(lineNo, "content after the end line");
        try {
            const auto j = nlohmann::json::parse(text);
            if (!j.is_object()) throw std::invalid_argument("not a JSON object");
            if (!sawHeader) {
                log.header = header_from(j);
                sawHeader = true;
                continue;
            }
            const auto type = field<std::string>(j, "t");
            if (type == "move")
                log.events.push_back(event_from(j));
            else if (type == "end")
                log.end = end_from(j);
            else
                throw std::invalid_argument("unknown record type '" + type + "'");
        } catch (const LogFormatError&) {
            throw;
        } catch (const std::exception& e) {
            throw LogFormatError(lineNo, e.what());
        }
    }
    if (!sawHeader) throw LogFormatError(lineNo + 1, "missing header");
    return log;
}

GameLog read_game_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log " + path.string());
    return parse_game_log(in);
}

GridState initial_grid(const LogHeader& header) {
    GridState grid;
    for (const auto& r : header.roster) grid.place(r.id, r.color, r.cell);
    return grid;
}

Replayer::Replayer(const LogHeader& header) : grid_(initial_grid(header)), table_(header.table) {}

void Replayer::apply(const MoveEvent& e, std::size_t index) {
    if (e.tMs < 0) throw ReplayError(index, "negative timestamp");
    if (e.tMs < lastMs_) throw ReplayError(index, "timestamp goes backwards");
    if (lastSeq_ && e.seq <= *lastSeq_) throw ReplayError(index, "sequence number not increasing");
    if (!grid_.contains(e.agent)) throw ReplayError(index, "unknown agent " + std::to_string(e.agent));
    if (grid_.cell_of(e.agent) != e.from) throw ReplayError(index, "agent is not at the logged origin");
    const auto target = move_target(grid_, e.from, e.dir);
    if (e.accepted) {
        if (!target) throw ReplayError(index, "accepted move has no legal target");
        if (*target != e.to) throw ReplayError(index, "accepted move does not land on the next empty cell");
        grid_.relocate(e.agent, e.to);
    } else {
        if (e.to != e.from) throw ReplayError(index, "rejected move changes position");
        if (target) throw ReplayError(index, "move was legal but logged as rejected");
    }
    const int expected = score(table_, neighbor_counts(grid_, e.agent));
    if (e.scoreAfter != expected)
        throw ReplayError(index, "scoreAfter " + std::to_string(e.scoreAfter) + " != replayed " +
                                     std::to_string(expected));
    lastMs_ = e.tMs;
    lastSeq_ = e.seq;
}

std::map<AgentId, int> scores_of(const GridState& grid, const UtilityTable& table) {
    std::map<AgentId, int> out;
    for (AgentId id : grid.agents()) out[id] = score(table, neighbor_counts(grid, id));
    return out;
}

ReplayResult replay(const GameLog& log) {
    Replayer r(log.header);
    for (std::size_t i = 0; i < log.events.size(); ++i) r.apply(log.events[i], i);
    ReplayResult result{r.grid(), scores_of(r.grid(), r.table())};
    if (log.end) {
        if (log.end->tMs < r.last_time()) throw ReplayError(log.events.size(), "game ends before its last event");
        if (log.end->scores != result.scores)
            throw ReplayError(log.events.size(), "end-of-game scores disagree with the replayed board");
    }
    return result;
}

GameLogWriter::GameLogWriter(const std::filesystem::path& path) : path_(path) {
    file_.reset(std::fopen(path.c_str(), "wx"));
    if (!file_) throw std::runtime_error("cannot create log " + path.string() + ": " + std::strerror(errno));
}

void GameLogWriter::line(const std::string& text) {
    std::fputs(text.c_str(), file_.get());
    std::fputc('\n', file_.get());
    std::fflush(file_.get());
}

}  // namespace seglab
