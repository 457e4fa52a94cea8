#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "seglab/client.hpp"
#include "seglab/event_log.hpp"
#include "seglab/loadtest.hpp"
#include "seglab/protocol.hpp"
#include "seglab/server.hpp"

using namespace seglab;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("seglab_it_" + name);
    fs::remove_all(d);
    return d;
}

std::unique_ptr<Server> start_server(const fs::path& dir, std::uint64_t seed = 1) {
    ServerOptions o;
    o.dataDir = dir;
    o.seed = seed;
    auto s = std::make_unique<Server>(o);
    s->start();
    return s;
}

std::unique_ptr<Client> connect(const Server& s, const std::string& target) {
    return std::make_unique<Client>("127.0.0.1", s.port(), target);
}

nlohmann::json expect_frame(Client& c, std::string_view type) {
    auto f = c.wait_for(type, 3s);
    if (!f) throw std::runtime_error("no " + std::string(type) + " frame");
    return nlohmann::json::parse(*f);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Server, SnapshotOnConnect) {
    auto server = start_server(fresh_dir("snapshot"));
    auto board = connect(*server, "/?role=board");
    const auto state = expect_frame(*board, "state");
    EXPECT_EQ(state.at("phase"), "lobby");
    EXPECT_EQ(state.at("grid").size(), 6u);
}

TEST(Server, JoinMoveAndBroadcast) {
    auto server = start_server(fresh_dir("play"));
    auto admin = connect(*server, "/room1?role=admin");
    auto p1 = connect(*server, "/room1");
    auto p2 = connect(*server, "/room1?role=player");
    p1->send(R"({"t":"join","id":1})");
    EXPECT_EQ(expect_frame(*p1, "joined").at("id"), 1);
    p2->send(R"({"t":"join","id":2})");
    const auto joined = expect_frame(*p2, "joined");
    EXPECT_NE(joined.at("color"), expect_frame(*p2, "state").at("colors").at("1"));

    // Not running yet: rejected with an error.
    p2->send(R"({"t":"move","dir":"down","ref":1})");
    EXPECT_FALSE(expect_frame(*p2, "ack").at("accepted").get<bool>());

    admin->send(R"({"t":"admin","cmd":"start"})");
    const auto gs = expect_frame(*p1, "gameStart");
    EXPECT_EQ(gs.at("table").size(), 11u);
    p2->send(R"({"t":"move","dir":"down","ref":2})");
    const auto ack = expect_frame(*p2, "ack");
    EXPECT_TRUE(ack.at("accepted").get<bool>());
    EXPECT_EQ(ack.at("seq"), 1);
    // Within one broadcast cycle every client sees the new board.
    for (Client* c : {p1.get(), admin.get()}) {
        nlohmann::json s;
        do s = expect_frame(*c, "state");
        while (s.at("seq") != 1);
        EXPECT_EQ(s.at("grid")[1][1], 2);
        EXPECT_EQ(s.at("grid")[0][1], 0);
    }
    p1->send(R"({"t":"move","dir":"up","ref":3})");
    EXPECT_FALSE(expect_frame(*p1, "ack").at("accepted").get<bool>());
}

TEST(Server, RejectsBadRequests) {
    auto server = start_server(fresh_dir("errors"));
    auto p = connect(*server, "/e");
    p->send(R"({"t":"move","dir":"down"})");
    EXPECT_EQ(expect_frame(*p, "error").at("reason"), "join first");
    p->send("{nonsense");
    EXPECT_NE(expect_frame(*p, "error").at("reason").get<std::string>().find("malformed"), std::string::npos);
    p->send(R"({"t":"admin","cmd":"start"})");
    EXPECT_EQ(expect_frame(*p, "error").at("reason"), "admin role required");
    p->send(R"({"t":"join","id":40})");
    expect_frame(*p, "error");
    p->send(R"({"t":"join","id":4})");
    expect_frame(*p, "joined");
    auto q = connect(*server, "/e");
    q->send(R"({"t":"join","id":4})");
    EXPECT_NE(expect_frame(*q, "error").at("reason").get<std::string>().find("already joined"), std::string::npos);
    auto board = connect(*server, "/e?role=board");
    board->send(R"({"t":"join","id":5})");
    expect_frame(*board, "error");
    EXPECT_THROW(Client("127.0.0.1", server->port(), "/bad%20id"), std::runtime_error);
    EXPECT_THROW(Client("127.0.0.1", server->port(), "/x?role=god"), std::runtime_error);
}

TEST(Server, ReconnectRebindsAndResyncs) {
    auto server = start_server(fresh_dir("reconnect"));
    auto admin = connect(*server, "/r?role=admin");
    {
        auto p = connect(*server, "/r");
        p->send(R"({"t":"join","id":9})");
        expect_frame(*p, "joined");
    }
    admin->send(R"({"t":"admin","cmd":"start"})");
    expect_frame(*admin, "gameStart");
    std::this_thread::sleep_for(200ms);  // let the old connection's close reach the server
    auto again = connect(*server, "/r");
    // A mid-game connection gets the table and a snapshot right away.
    expect_frame(*again, "gameStart");
    again->send(R"({"t":"join","id":9})");
    expect_frame(*again, "joined");
    again->send(R"({"t":"move","dir":"left","ref":1})");
    EXPECT_TRUE(expect_frame(*again, "ack").at("accepted").get<bool>());
}

TEST(Server, EveryoneSatisfiedEndsWithinOneBroadcastCycle) {
    auto server = start_server(fresh_dir("early"));
    auto admin = connect(*server, "/s?role=admin");
    std::vector<std::unique_ptr<Client>> players;
    for (int id = 1; id <= 13; ++id) {
        players.push_back(connect(*server, "/s"));
        players.back()->send(R"({"t":"join","id":)" + std::to_string(id) + "}");
        expect_frame(*players.back(), "joined");
    }
    admin->send(R"({"t":"admin","cmd":"start"})");
    for (auto& p : players) expect_frame(*p, "gameStart");
    for (auto& p : players) p->send(R"({"t":"satisfied","v":true})");
    const auto sent = std::chrono::steady_clock::now();
    const auto end = expect_frame(*admin, "gameEnd");
    const auto waited = std::chrono::steady_clock::now() - sent;
    EXPECT_EQ(end.at("reason"), "satisfied");
    EXPECT_LT(waited, 100ms);
}

TEST(Server, StopFlushesARunningGame) {
    const fs::path dir = fresh_dir("stop");
    auto server = start_server(dir);
    auto admin = connect(*server, "/?role=admin");
    auto p = connect(*server, "/");
    p->send(R"({"t":"join","id":14})");
    expect_frame(*p, "joined");
    admin->send(R"({"t":"admin","cmd":"start"})");
    expect_frame(*admin, "gameStart");
    p->send(R"({"t":"move","dir":"down","ref":1})");
    expect_frame(*p, "ack");
    server->stop();
    ASSERT_EQ(server->logs().size(), 1u);
    const GameLog log = read_game_log(server->logs()[0]);
    EXPECT_EQ(log.events.size(), 1u);
    ASSERT_TRUE(log.end.has_value());
    EXPECT_EQ(log.end->reason, "stopped");
    EXPECT_NO_THROW(replay(log));
    // The client is told about the end before the connection closes.
    expect_frame(*p, "gameEnd");
}

TEST(Server, SessionsAreIndependentAndLogsSurviveRestarts) {
    const fs::path dir = fresh_dir("multi");
    std::map<fs::path, std::string> before;
    {
        auto server = start_server(dir);
        auto a = connect(*server, "/alpha?role=admin");
        auto b = connect(*server, "/beta?role=admin");
        auto pa = connect(*server, "/alpha");
        auto pb = connect(*server, "/beta");
        pa->send(R"({"t":"join","id":1})");
        pb->send(R"({"t":"join","id":2})");
        expect_frame(*pa, "joined");
        expect_frame(*pb, "joined");
        a->send(R"({"t":"admin","cmd":"start","trial":true})");
        b->send(R"({"t":"admin","cmd":"start","trial":true})");
        expect_frame(*a, "gameStart");
        expect_frame(*b, "gameStart");
        pa->send(R"({"t":"move","dir":"right","ref":1})");
        expect_frame(*pa, "ack");
        a->send(R"({"t":"admin","cmd":"stop"})");
        b->send(R"({"t":"admin","cmd":"stop"})");
        expect_frame(*a, "gameEnd");
        expect_frame(*b, "gameEnd");
        server->stop();
        ASSERT_EQ(server->logs().size(), 2u);
        for (const auto& p : server->logs()) before[p] = slurp(p);
        std::set<std::string> sessions;
        for (const auto& p : server->logs()) sessions.insert(read_game_log(p).header.session);
        EXPECT_EQ(sessions, (std::set<std::string>{"alpha", "beta"}));
    }
    {
        auto server = start_server(dir);
        auto a = connect(*server, "/alpha?role=admin");
        a->send(R"({"t":"admin","cmd":"start","trial":true})");
        expect_frame(*a, "gameStart");
        server->stop();
        ASSERT_EQ(server->logs().size(), 1u);
        EXPECT_FALSE(before.contains(server->logs()[0]));
    }
    for (const auto& [p, text] : before) EXPECT_EQ(slurp(p), text);
}

TEST(Server, AdminCreateAndFinalScores) {
    auto server = start_server(fresh_dir("final"));
    auto admin = connect(*server, "/f?role=admin");
    expect_frame(*admin, "state");
    admin->send(R"({"t":"admin","cmd":"create","config":{"players":5}})");
    expect_frame(*admin, "error");
    admin->send(R"({"t":"admin","cmd":"create","config":{"players":13,"order":0,"gameLengthMs":60000}})");
    expect_frame(*admin, "state");
    auto p = connect(*server, "/f");
    p->send(R"({"t":"join","id":1})");
    expect_frame(*p, "joined");
    admin->send(R"({"t":"admin","cmd":"start","kind":"diverse"})");
    EXPECT_NE(expect_frame(*admin, "error").at("reason").get<std::string>().find("must be same"), std::string::npos);
    for (int g = 0; g < 4; ++g) {
        admin->send(R"({"t":"admin","cmd":"start"})");
        expect_frame(*admin, "gameStart");
        admin->send(R"({"t":"admin","cmd":"stop"})");
        expect_frame(*admin, "gameEnd");
    }
    admin->send(R"({"t":"admin","cmd":"final"})");
    const auto fin = expect_frame(*p, "finalScores");
    ASSERT_EQ(fin.at("scores").size(), 1u);
    EXPECT_EQ(fin.at("scores")[0].at("total"), 20);
    server->stop();
    EXPECT_EQ(server->logs().size(), 4u);
}

TEST(Loadtest, ShortRandomRunReplaysCleanly) {
    LoadtestOptions o;
    o.dataDir = fresh_dir("load");
    o.players = 20;
    o.movesPerSec = 40;
    o.durationMs = 3000;
    const LoadtestReport r = run_loadtest(o);
    EXPECT_EQ(r.invariantViolations, 0) << r.to_json();
    EXPECT_EQ(r.replayOk, true);
    EXPECT_EQ(r.endReason, "timeout");
    EXPECT_EQ(r.endTMs, 3000);
    EXPECT_GT(r.movesSent, 50);
    EXPECT_EQ(r.movesAccepted + r.movesRejected, r.movesSent);
    EXPECT_GT(r.broadcastLatency.samples, 0u);
    EXPECT_LT(r.broadcastLatency.p50, 150.0);
}

TEST(Loadtest, NoBotsIsAnEmptyGameThatTimesOut) {
    LoadtestOptions o;
    o.dataDir = fresh_dir("empty");
    o.players = 0;
    o.durationMs = 1000;
    const LoadtestReport r = run_loadtest(o);
    EXPECT_EQ(r.invariantViolations, 0) << r.to_json();
    EXPECT_EQ(r.movesSent, 0);
    EXPECT_EQ(r.endTMs, 1000);
    EXPECT_EQ(r.endReason, "timeout");
    EXPECT_EQ(r.replayOk, true);
}

TEST(Loadtest, RejectsInvalidOptions) {
    LoadtestOptions o;
    o.players = 37;
    EXPECT_THROW(run_loadtest(o), DomainError);
    o = LoadtestOptions{};
    o.movesPerSec = 0;
    EXPECT_THROW(run_loadtest(o), DomainError);
    o = LoadtestOptions{};
    o.durationMs = 130'000;
    EXPECT_THROW(run_loadtest(o), DomainError);
}
