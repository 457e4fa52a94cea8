#include "seglab/loadtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "seglab/client.hpp"
#include "seglab/event_log.hpp"
#include "seglab/metrics.hpp"
#include "seglab/protocol.hpp"
#include "seglab/rng.hpp"
#include "seglab/server.hpp"

namespace seglab {

namespace {

using SteadyClock = std::chrono::steady_clock;
using json = nlohmann::json;

double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

LatencyStats percentiles(std::vector<double> v) {
    LatencyStats s;
    s.samples = v.size();
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    auto rank = [&](double q) {
        const auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
        return v[std::min(v.size() - 1, i == 0 ? 0 : i - 1)];
    };
    s.p50 = rank(0.50);
    s.p95 = rank(0.95);
    s.p99 = rank(0.99);
    s.max = v.back();
    return s;
}

/// Counters and latency samples shared by every bot's I/O thread.
struct Tally {
    std::atomic<std::int64_t> accepted{0}, rejected{0};
    std::mutex mu;
    std::vector<double> latencies;
};

class Bot {
public:
    Bot(AgentId id, Tally& tally) : id_(id), tally_(tally) {}

    void connect(const LoadtestOptions& o) {
        client_ = std::make_unique<Client>(o.host, o.port, "/" + o.session + "?role=player",
                                           [this](const std::string& f) { on_frame(f); });
    }

    /// Blocks until the server confirms the join or refuses it.
    void join() {
        client_->send(protocol::to_json(protocol::Join{id_, std::nullopt}));
        std::unique_lock lock(mu_);
        if (!cv_.wait_for(lock, std::chrono::seconds(5), [&] { return joined_ || error_; }))
            throw std::runtime_error("bot " + std::to_string(id_) + ": no reply to join");
        if (!joined_) throw std::runtime_error("bot " + std::to_string(id_) + ": " + *error_);
    }

    void move(Direction d, std::int64_t ref) {
        {
            std::lock_guard lock(mu_);
            sentAt_[ref] = SteadyClock::now();
        }
        client_->send(protocol::to_json(protocol::Move{d, ref}));
    }

    /// The direction that most improves this bot's score on its latest view, if any.
    std::optional<Direction> greedy_choice(Rng& rng) {
        std::lock_guard lock(mu_);
        if (!state_ || !table_ || !color_) return std::nullopt;
        GridState grid;
        try {
            grid = state_->to_grid();
        } catch (const std::exception&) {
            return std::nullopt;
        }
        if (!grid.contains(id_)) return std::nullopt;
        const Cell here = grid.cell_of(id_);
        int best = score(*table_, neighbor_counts(grid, id_));
        std::vector<Direction> choices;
        for (Direction d : kDirections) {
            auto t = move_target(grid, here, d);
            if (!t) continue;
            const int s = score(*table_, neighbor_counts_at(grid, *t, *color_, here));
            if (s > best) {
                best = s;
                choices.clear();
            }
            if (s == best && s > score(*table_, neighbor_counts(grid, id_))) choices.push_back(d);
        }
        if (choices.empty()) return std::nullopt;
        return choices[rng.below(choices.size())];
    }

    void close() {
        if (client_) client_->close();
    }

private:
    void on_frame(const std::string& text) {
        const auto type = protocol::frame_type(text);
        const auto now = SteadyClock::now();
        std::lock_guard lock(mu_);
        if (type == "state") {
            try {
                state_ = protocol::parse_state(text);
            } catch (const ProtocolError&) {
                return;
            }
            for (auto it = seqSentAt_.begin(); it != seqSentAt_.end() && it->first <= state_->seq;) {
                {
                    std::lock_guard t(tally_.mu);
                    tally_.latencies.push_back(ms_between(it->second, now));
                }
                it = seqSentAt_.erase(it);
            }
        } else if (type == "ack") {
            const json j = json::parse(text);
            const auto ref = j.at("ref").get<std::int64_t>();
            const auto seq = j.at("seq").get<std::uint64_t>();
            auto it = sentAt_.find(ref);
            if (it == sentAt_.end()) return;
            if (j.at("accepted").get<bool>())
                ++tally_.accepted;
            else
                ++tally_.rejected;
            if (seq > 0) seqSentAt_[seq] = it->second;
            sentAt_.erase(it);
        } else if (type == "gameStart") {
            const json j = json::parse(text);
            table_ = parse_utility_table(json{{"name", j.at("kind")}, {"bins", j.at("table")}}.dump());
        } else if (type == "joined") {
            color_ = parse_color(json::parse(text).at("color").get<std::string>());
            joined_ = true;
            cv_.notify_all();
        } else if (type == "error" && !joined_) {
            error_ = json::parse(text).at("reason").get<std::string>();
            cv_.notify_all();
        }
    }

    AgentId id_;
    Tally& tally_;
    std::unique_ptr<Client> client_;
    std::mutex mu_;
    std::condition_variable cv_;
    bool joined_ = false;
    std::optional<std::string> error_;
    std::optional<Color> color_;
    std::optional<protocol::StateFrame> state_;
    std::optional<UtilityTable> table_;
    std::map<std::int64_t, SteadyClock::time_point> sentAt_;
    std::map<std::uint64_t, SteadyClock::time_point> seqSentAt_;
};

/// The admin connection: sets up the game and watches every broadcast.
class Observer {
public:
    Observer(const LoadtestOptions& o, LoadtestReport& report) : opts_(o), report_(report) {
        client_ = std::make_unique<Client>(o.host, o.port, "/" + o.session + "?role=admin",
                                           [this](const std::string& f) { on_frame(f); });
    }

    void send(const std::string& text) { client_->send(text); }

    /// Waits until `pred` holds or an error frame arrives; throws on error or timeout.
    template <class Pred>
    void await(Pred pred, std::chrono::milliseconds timeout, const char* what) {
        std::unique_lock lock(mu_);
        const std::size_t errorsBefore = errors_.size();
        if (!cv_.wait_for(lock, timeout, [&] { return pred() || errors_.size() > errorsBefore; }))
            throw std::runtime_error(std::string("timed out waiting for ") + what);
        if (!pred()) throw std::runtime_error(std::string(what) + ": " + errors_.back());
    }

    // The accessors below expect mutex() held, as it is inside await().
    std::size_t states() const { return states_; }
    bool started() const { return startedAt_.has_value(); }
    bool ended() const { return endedAt_.has_value(); }
    bool saw_intermission() const { return lastState_ && lastState_->phase == "intermission"; }

    /// Blocks until the game ends or `until` passes.
    bool wait_end_until(SteadyClock::time_point until) {
        std::unique_lock lock(mu_);
        return cv_.wait_until(lock, until, [&] { return endedAt_.has_value(); });
    }

    std::mutex& mutex() { return mu_; }
    const std::optional<protocol::StateFrame>& last_state() const { return lastState_; }
    const std::map<AgentId, int>& end_scores() const { return endScores_; }
    std::int64_t observed_ms() const {
        return startedAt_ && endedAt_
                   ? std::chrono::duration_cast<std::chrono::milliseconds>(*endedAt_ - *startedAt_).count()
                   : 0;
    }

    void close() { client_->close(); }

private:
    void violation(std::string note) {
        ++report_.invariantViolations;
        if (report_.violationNotes.size() < 20) report_.violationNotes.push_back(std::move(note));
    }

    void check(const protocol::StateFrame& s) {
        std::set<int> seen;
        int onBoard = 0;
        for (const auto& row : s.grid)
            for (int id : row) {
                if (id == 0) continue;
                ++onBoard;
                if (!seen.insert(id).second) violation("agent " + std::to_string(id) + " on two cells");
                if (!s.colors.contains(id)) violation("unknown agent " + std::to_string(id) + " on the board");
            }
        if (onBoard != static_cast<int>(s.colors.size()))
            violation(std::to_string(onBoard) + " agents on the board, roster has " + std::to_string(s.colors.size()));
        if (s.clockMs > opts_.durationMs) violation("clock " + std::to_string(s.clockMs) + " past the game length");
    }

    void on_frame(const std::string& text) {
        const auto type = protocol::frame_type(text);
        const auto now = SteadyClock::now();
        std::lock_guard lock(mu_);
        if (type == "state") {
            try {
                auto s = protocol::parse_state(text);
                check(s);
                lastState_ = std::move(s);
            } catch (const ProtocolError& e) {
                violation(e.what());
            }
            ++states_;
        } else if (type == "gameStart") {
            startedAt_ = now;
        } else if (type == "gameEnd") {
            endedAt_ = now;
            const json j = json::parse(text);
            for (const auto& [k, v] : j.at("scores").items()) endScores_[std::stoi(k)] = v.get<int>();
            report_.endReason = j.value("reason", "");
            report_.endTMs = j.value("tMs", std::int64_t{0});
        } else if (type == "error") {
            errors_.push_back(json::parse(text).at("reason").get<std::string>());
        }
        cv_.notify_all();
    }

    const LoadtestOptions& opts_;
    LoadtestReport& report_;
    std::unique_ptr<Client> client_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t states_ = 0;
    std::vector<std::string> errors_;
    std::optional<SteadyClock::time_point> startedAt_, endedAt_;
    std::optional<protocol::StateFrame> lastState_;
    std::map<AgentId, int> endScores_;
};

int order_starting_with(GameKind kind) {
    const auto& orders = all_game_orders();
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i][0] == kind) return static_cast<int>(i);
    return 0;
}

}  // namespace

std::string_view to_string(BotPolicy p) noexcept { return p == BotPolicy::Random ? "random" : "greedy"; }

std::optional<BotPolicy> parse_bot_policy(std::string_view s) noexcept {
    if (s == "random") return BotPolicy::Random;
    if (s == "greedy") return BotPolicy::Greedy;
    return std::nullopt;
}

void LoadtestOptions::validate() const {
    if (players < 0 || players > kMaxPlayers) throw DomainError("players must be in 0..36");
    if (!(movesPerSec > 0.0) || !std::isfinite(movesPerSec)) throw DomainError("moves-per-sec must be positive");
    if (durationMs < 1 || durationMs > kGameLengthMs) throw DomainError("duration must be in 1..120000 ms");
    if (!valid_session_id(session)) throw DomainError("session id must be 1-64 characters of [A-Za-z0-9_-]");
}

std::string LoadtestReport::to_json() const {
    nlohmann::ordered_json j;
    j["movesSent"] = movesSent;
    j["movesAccepted"] = movesAccepted;
    j["movesRejected"] = movesRejected;
    j["movesIdle"] = movesIdle;
    j["acceptanceRate"] = acceptanceRate;
    j["invariantViolations"] = invariantViolations;
    j["violationNotes"] = violationNotes;
    j["broadcastLatencyMs"] = {{"samples", broadcastLatency.samples},
                               {"p50", broadcastLatency.p50},
                               {"p95", broadcastLatency.p95},
                               {"p99", broadcastLatency.p99},
                               {"max", broadcastLatency.max}};
    j["endTMs"] = endTMs;
    j["endReason"] = endReason;
    j["observedGameMs"] = observedGameMs;
    j["finalSegregation"] = finalSegregation ? nlohmann::ordered_json(*finalSegregation) : nullptr;
    j["log"] = log ? nlohmann::ordered_json(log->string()) : nullptr;
    j["replayOk"] = replayOk ? nlohmann::ordered_json(*replayOk) : nullptr;
    return j.dump(2);
}

LoadtestReport run_loadtest(const LoadtestOptions& options) {
    options.validate();
    LoadtestOptions o = options;
    std::unique_ptr<Server> server;
    if (o.port == 0) {
        ServerOptions so;
        so.dataDir = o.dataDir;
        so.seed = o.seed;
        server = std::make_unique<Server>(so);
        server->start();
        o.port = server->port();
    }

    LoadtestReport report;
    Tally tally;
    Observer admin(o, report);
    admin.await([&] { return admin.states() >= 1; }, std::chrono::seconds(5), "initial state");

    protocol::AdminCreate create;
    create.config.expectedPlayers = std::clamp(o.players, kMinPlayers, kMaxPlayers);
    create.config.seed = o.seed;
    create.config.orderIndex = order_starting_with(o.kind);
    create.config.gameLengthMs = o.durationMs;
    std::size_t before;
    {
        std::lock_guard lock(admin.mutex());
        before = admin.states();
    }
    admin.send(protocol::to_json(create));
    admin.await([&] { return admin.states() > before; }, std::chrono::seconds(5), "session setup");

    std::vector<std::unique_ptr<Bot>> bots;
    for (int i = 1; i <= o.players; ++i) {
        bots.push_back(std::make_unique<Bot>(i, tally));
        bots.back()->connect(o);
        bots.back()->join();
    }

    admin.send(protocol::to_json(protocol::AdminStart{false, o.kind}));
    admin.await([&] { return admin.started(); }, std::chrono::seconds(5), "game start");

    Rng rng(derive_seed(o.seed, 0x10adULL));
    const auto start = SteadyClock::now();
    const auto giveUp = start + std::chrono::milliseconds(o.durationMs + 5000);
    auto next = start;
    std::int64_t ref = 0;
    while (!admin.wait_end_until(std::min(next, giveUp))) {
        if (SteadyClock::now() >= giveUp) break;
        if (SteadyClock::now() < next) continue;
        next += std::chrono::duration_cast<SteadyClock::duration>(
            std::chrono::duration<double>(-std::log(1.0 - rng.unit()) / o.movesPerSec));
        if (bots.empty()) continue;
        Bot& bot = *bots[rng.below(bots.size())];
        std::optional<Direction> d;
        if (o.policy == BotPolicy::Random)
            d = kDirections[rng.below(4)];
        else
            d = bot.greedy_choice(rng);
        if (!d) {
            ++report.movesIdle;
            continue;
        }
        bot.move(*d, ++ref);
        ++report.movesSent;
    }

    bool ended;
    {
        std::lock_guard lock(admin.mutex());
        ended = admin.ended();
    }
    if (!ended) {
        std::lock_guard lock(admin.mutex());
        ++report.invariantViolations;
        report.violationNotes.push_back("game did not end within 5 s of its length");
    } else {
        // The snapshot that follows gameEnd carries the final board.
        try {
            admin.await([&] { return admin.saw_intermission(); }, std::chrono::seconds(2), "final state");
        } catch (const std::exception& e) {
            std::lock_guard lock(admin.mutex());
            ++report.invariantViolations;
            report.violationNotes.push_back(e.what());
        }
    }
    // Let in-flight acks and broadcasts arrive before counting.
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    for (auto& b : bots) b->close();
    admin.close();

    report.movesAccepted = tally.accepted;
    report.movesRejected = tally.rejected;
    const auto acked = report.movesAccepted + report.movesRejected;
    report.acceptanceRate = acked == 0 ? 0.0 : static_cast<double>(report.movesAccepted) / static_cast<double>(acked);
    {
        std::lock_guard lock(tally.mu);
        report.broadcastLatency = percentiles(tally.latencies);
    }
    report.observedGameMs = admin.observed_ms();

    const auto& last = admin.last_state();
    const UtilityTable table = UtilityTable::preset(o.kind);
    std::optional<GridState> broadcastGrid;
    if (last) {
        try {
            broadcastGrid = last->to_grid();
            if (broadcastGrid->size() > 0) report.finalSegregation = snapshot(*broadcastGrid, table).segregation;
        } catch (const std::exception& e) {
            ++report.invariantViolations;
            report.violationNotes.push_back(e.what());
        }
    }

    if (server) {
        server->stop();
        const auto logs = server->logs();
        if (!logs.empty()) {
            report.log = logs.back();
            try {
                const GameLog log = read_game_log(*report.log);
                const ReplayResult r = replay(log);
                bool ok = true;
                if (broadcastGrid && r.finalGrid != *broadcastGrid) {
                    ok = false;
                    report.violationNotes.push_back("replayed final grid differs from the last broadcast");
                }
                if (r.scores != admin.end_scores()) {
                    ok = false;
                    report.violationNotes.push_back("replayed scores differ from the gameEnd frame");
                }
                if (!log.end) {
                    ok = false;
                    report.violationNotes.push_back("log has no end line");
                }
                report.replayOk = ok;
                if (!ok) ++report.invariantViolations;
            } catch (const std::exception& e) {
                report.replayOk = false;
                ++report.invariantViolations;
                report.violationNotes.push_back(std::string("replay: ") + e.what());
            }
        }
    }
    return report;
}

}  // namespace seglab
