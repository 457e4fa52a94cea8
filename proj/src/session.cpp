#include "seglab/session.hpp"

#include <algorithm>

#include <json.hpp>

#include "seglab/rng.hpp"

namespace seglab {

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::Lobby: return "lobby";
        case Phase::TrialRun: return "trial";
        case Phase::Game: return "game";
        case Phase::Intermission: return "intermission";
        case Phase::FinalScores: return "final";
    }
    return "?";
}

const std::array<GameOrder, 24>& all_game_orders() {
    static const std::array<GameOrder, 24> orders = [] {
        std::array<GameOrder, 24> out{};
        GameOrder o = kGameKinds;
        std::size_t i = 0;
        do {
            out[i++] = o;
        } while (std::next_permutation(o.begin(), o.end()));
        return out;
    }();
    return orders;
}

std::string SessionConfig::to_json() const {
    nlohmann::ordered_json j;
    j["session"] = sessionId;
    j["players"] = expectedPlayers;
    j["seed"] = seed;
    j["order"] = orderIndex ? nlohmann::ordered_json(*orderIndex) : nlohmann::ordered_json(nullptr);
    j["trialKind"] = to_string(trialKind);
    j["gameLengthMs"] = gameLengthMs;
    return j.dump();
}

Session::Session(SessionConfig config) : config_(std::move(config)) {}

Session Session::create(SessionConfig config) {
    if (config.expectedPlayers < kMinPlayers || config.expectedPlayers > kMaxPlayers)
        throw SessionError("expected players must be in 13..36, got " + std::to_string(config.expectedPlayers));
    if (config.orderIndex && (*config.orderIndex < 0 || *config.orderIndex >= 24))
        throw SessionError("game order index must be in 0..23");
    if (config.gameLengthMs < 1 || config.gameLengthMs > kGameLengthMs)
        throw SessionError("game length must be in 1..120000 ms");
    if (config.sessionId.empty()) throw SessionError("session id must not be empty");
    for (GameKind k : kGameKinds)
        if (auto why = shape_violation(k, config.table(k).bins())) throw SessionError(*why);

    Session s(std::move(config));
    Rng rng(s.config_.seed);
    s.orderIndex_ = s.config_.orderIndex ? *s.config_.orderIndex : static_cast<int>(rng.below(24));
    s.order_ = all_game_orders()[static_cast<std::size_t>(s.orderIndex_)];
    s.firstColor_ = rng.coin() ? Color::Yellow : Color::Blue;
    return s;
}

const Player& Session::join(int loginId, std::optional<std::string> name) {
    if (phase_ != Phase::Lobby) throw SessionError("session already in play");
    if (loginId < 1 || loginId > kMaxPlayers) throw SessionError("login id must be in 1..36");
    if (player(loginId)) throw SessionError("login id " + std::to_string(loginId) + " already joined");
    const bool first = roster_.size() % 2 == 0;
    roster_.push_back({loginId, first ? firstColor_ : other(firstColor_), loginId - 1, std::move(name)});
    grid_ = seated_grid();
    return roster_.back();
}

GridState Session::seated_grid() const {
    GridState g;
    for (const Player& p : roster_) g.place(p.id, p.color, Cell::from_index(p.seat));
    return g;
}

GameStart Session::start_game(bool trial, std::optional<GameKind> kind, std::int64_t nowMs) {
    if (phase_ != Phase::Lobby && phase_ != Phase::Intermission) throw SessionError("a game is already running");
    GameStart gs;
    if (trial) {
        if (gamesPlayed_ > 0) throw SessionError("the trial run must come before game 1");
        gs.kind = kind.value_or(config_.trialKind);
        gs.number = 0;
        gs.trial = true;
    } else {
        if (gamesPlayed_ >= kGamesPerSession) throw SessionError("all four games have been played");
        const GameKind due = order_[static_cast<std::size_t>(gamesPlayed_)];
        if (kind && *kind != due)
            throw SessionError("game " + std::to_string(gamesPlayed_ + 1) + " must be " + std::string(to_string(due)));
        gs.kind = due;
        gs.number = gamesPlayed_ + 1;
    }
    gs.table = config_.table(gs.kind);

    phase_ = trial ? Phase::TrialRun : Phase::Game;
    kind_ = gs.kind;
    gameNumber_ = gs.number;
    startMs_ = nowMs;
    seq_ = 0;
    satisfied_.clear();
    endScores_.reset();
    grid_ = seated_grid();

    current_ = GameRecord{};
    current_.number = gs.number;
    current_.kind = gs.kind;
    current_.trial = trial;
    LogHeader& h = current_.log.header;
    h.source = "service";
    h.session = config_.sessionId;
    h.game = gs.number;
    h.trial = trial;
    h.table = gs.table;
    h.seed = config_.seed;
    for (const Player& p : roster_) h.roster.push_back({p.id, p.color, p.seat, Cell::from_index(p.seat)});
    h.configJson = config_.to_json();
    return gs;
}

std::int64_t Session::clock_ms(std::int64_t nowMs) const noexcept {
    if (!running()) return 0;
    return std::clamp<std::int64_t>(nowMs - startMs_, 0, config_.gameLengthMs);
}

void Session::require_player(AgentId agent) const {
    if (!player(agent)) throw ProtocolError("unknown agent " + std::to_string(agent));
}

std::optional<GameRecord> Session::tick(std::int64_t nowMs) {
    if (running() && nowMs - startMs_ >= config_.gameLengthMs) return end_game(nowMs, "timeout");
    return std::nullopt;
}

MoveOutcome Session::handle_move(AgentId agent, Direction dir, std::int64_t nowMs) {
    require_player(agent);
    MoveOutcome out;
    out.expired = tick(nowMs);
    MoveEvent& e = out.event;
    e.agent = agent;
    e.dir = dir;
    e.from = e.to = grid_.cell_of(agent);
    if (!running()) {
        e.tMs = 0;
        e.scoreAfter = current_scores()[agent];
        return out;
    }
    e.tMs = clock_ms(nowMs);
    e.seq = ++seq_;
    if (auto target = move_target(grid_, e.from, dir)) {
        grid_.relocate(agent, *target);
        e.to = *target;
        e.accepted = true;
        satisfied_.clear();
    }
    e.scoreAfter = score(current_table(), neighbor_counts(grid_, agent));
    current_.log.events.push_back(e);
    out.logged = true;
    return out;
}

std::optional<GameRecord> Session::set_satisfied(AgentId agent, bool flag, std::int64_t nowMs) {
    require_player(agent);
    if (auto expired = tick(nowMs)) return expired;
    if (!running()) throw SessionError("no game is running");
    if (flag)
        satisfied_.insert(agent);
    else
        satisfied_.erase(agent);
    if (!roster_.empty() && satisfied_.size() == roster_.size()) return end_game(nowMs, "satisfied");
    return std::nullopt;
}

GameRecord Session::end_game(std::int64_t nowMs, std::string reason) {
    if (!running()) throw SessionError("no game is running");
    const std::int64_t t = clock_ms(nowMs);
    auto scores = scores_of(grid_, current_table());
    if (phase_ == Phase::Game) {
        for (const auto& [id, pts] : scores) cumulative_[id] += pts;
        ++gamesPlayed_;
    }
    current_.log.end = GameEnd{t, std::move(reason), scores};
    endScores_ = std::move(scores);
    phase_ = Phase::Intermission;
    satisfied_.clear();
    return current_;
}

std::vector<FinalScore> Session::final_scores() const {
    if (gamesPlayed_ < kGamesPerSession) throw SessionError("the session has not finished all four games");
    std::vector<FinalScore> out;
    for (const Player& p : roster_) {
        auto it = cumulative_.find(p.id);
        out.push_back({p.id, it == cumulative_.end() ? 0 : it->second});
    }
    std::stable_sort(out.begin(), out.end(), [](const FinalScore& a, const FinalScore& b) { return a.total > b.total; });
    return out;
}

void Session::show_final_scores() {
    if (phase_ != Phase::Intermission || gamesPlayed_ < kGamesPerSession)
        throw SessionError("final scores are shown after game 4");
    phase_ = Phase::FinalScores;
}

const UtilityTable& Session::current_table() const {
    return config_.table(kind_.value_or(config_.trialKind));
}

std::map<AgentId, int> Session::current_scores() const {
    if (running() || !endScores_) {
        if (!kind_) return {};
        return scores_of(grid_, current_table());
    }
    return *endScores_;
}

std::optional<Player> Session::player(AgentId id) const {
    for (const Player& p : roster_)
        if (p.id == id) return p;
    return std::nullopt;
}

}  // namespace seglab
