#include <gtest/gtest.h>

#include <map>

#include "support/oracles.hpp"
#include "support/stats.hpp"
#include "seglab/session.hpp"

using namespace seglab;

namespace {

SessionConfig config_with(std::uint64_t seed, int orderIndex = 0) {
    SessionConfig c;
    c.seed = seed;
    c.orderIndex = orderIndex;
    return c;
}

Session with_players(int n, std::uint64_t seed = 1, int orderIndex = 0) {
    Session s = Session::create(config_with(seed, orderIndex));
    for (int id = 1; id <= n; ++id) s.join(id);
    return s;
}

GameRecord all_satisfied(Session& s, std::int64_t nowMs) {
    std::optional<GameRecord> rec;
    for (const Player& p : s.roster()) rec = s.set_satisfied(p.id, true, nowMs);
    return *rec;
}

}  // namespace

TEST(AllGameOrders, TwentyFourDistinctPermutations) {
    const auto& orders = all_game_orders();
    std::set<GameOrder> distinct(orders.begin(), orders.end());
    EXPECT_EQ(distinct.size(), 24u);
    for (const auto& o : orders) {
        std::set<GameKind> kinds(o.begin(), o.end());
        EXPECT_EQ(kinds.size(), 4u);
    }
    EXPECT_TRUE(std::is_sorted(orders.begin(), orders.end()));
}

TEST(CreateSession, OrderIsUniformOverSeeds) {
    std::vector<long> counts(24, 0);
    for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
        SessionConfig c;
        c.seed = seed;
        const Session s = Session::create(c);
        ++counts[static_cast<std::size_t>(s.order_index())];
        ASSERT_EQ(s.game_order(), all_game_orders()[static_cast<std::size_t>(s.order_index())]);
    }
    EXPECT_GT(stats::uniform_p_value(counts), 0.01);
}

TEST(CreateSession, SameSeedSameOrder) {
    SessionConfig c;
    c.seed = 42;
    EXPECT_EQ(Session::create(c).game_order(), Session::create(c).game_order());
    EXPECT_EQ(Session::create(c).phase(), Phase::Lobby);
}

TEST(CreateSession, RejectsInvalidConfig) {
    SessionConfig c;
    c.expectedPlayers = 5;
    EXPECT_THROW(Session::create(c), SessionError);
    c.expectedPlayers = 37;
    EXPECT_THROW(Session::create(c), SessionError);
    c = SessionConfig{};
    c.orderIndex = 24;
    EXPECT_THROW(Session::create(c), SessionError);
    c = SessionConfig{};
    c.gameLengthMs = 0;
    EXPECT_THROW(Session::create(c), SessionError);
    c = SessionConfig{};
    c.tables[1] = UtilityTable::preset(GameKind::Same);  // Diverse slot must be non-increasing
    EXPECT_THROW(Session::create(c), SessionError);
}

TEST(Join, SeatsFollowLoginIds) {
    Session s = Session::create(config_with(0));
    s.join(1);
    s.join(8);
    EXPECT_EQ(s.grid().cell_of(1), (Cell{0, 0}));
    EXPECT_EQ(s.grid().cell_of(8), (Cell{1, 1}));
    EXPECT_EQ(s.player(8)->seat, 7);
}

TEST(Join, ColorsAlternate) {
    const Session even = with_players(20);
    EXPECT_EQ(even.grid().count(Color::Yellow), 10);
    EXPECT_EQ(even.grid().count(Color::Blue), 10);
    int yellowMajority = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Session odd = with_players(21, seed);
        const int y = odd.grid().count(Color::Yellow);
        ASSERT_TRUE(y == 10 || y == 11);
        yellowMajority += y == 11;
    }
    EXPECT_GT(yellowMajority, 60);
    EXPECT_LT(yellowMajority, 140);
}

TEST(Join, Errors) {
    Session s = with_players(13);
    EXPECT_THROW(s.join(3), SessionError);
    EXPECT_THROW(s.join(0), SessionError);
    EXPECT_THROW(s.join(37), SessionError);
    s.start_game(true, std::nullopt, 0);
    EXPECT_THROW(s.join(14), SessionError);
}

TEST(StartGame, TrialRunComesFirstAndIsNotScored) {
    Session s = with_players(13);
    const GameStart trial = s.start_game(true, std::nullopt, 0);
    EXPECT_TRUE(trial.trial);
    EXPECT_EQ(trial.number, 0);
    EXPECT_EQ(s.phase(), Phase::TrialRun);
    s.end_game(10'000);
    EXPECT_TRUE(s.cumulative_scores().empty());
    EXPECT_EQ(s.games_played(), 0);
    // A second practice round is still allowed before game 1.
    s.start_game(true, GameKind::Diverse, 20'000);
    EXPECT_EQ(s.current_kind(), GameKind::Diverse);
    s.end_game(30'000);
    s.start_game(false, std::nullopt, 40'000);
    s.end_game(50'000);
    EXPECT_THROW(s.start_game(true, std::nullopt, 60'000), SessionError);
}

TEST(StartGame, OutOfOrderIsRejected) {
    Session s = with_players(13, 1, 0);  // Same, Diverse, SameAndDiverse, SameOrDifferent
    EXPECT_THROW(s.start_game(false, GameKind::SameAndDiverse, 0), SessionError);
    EXPECT_EQ(s.phase(), Phase::Lobby);
    EXPECT_EQ(s.start_game(false, GameKind::Same, 0).number, 1);
    EXPECT_THROW(s.start_game(false, GameKind::Diverse, 0), SessionError);  // still running
    s.end_game(1000);
    EXPECT_THROW(s.start_game(false, GameKind::SameAndDiverse, 2000), SessionError);
    const GameStart g2 = s.start_game(false, std::nullopt, 2000);
    EXPECT_EQ(g2.kind, GameKind::Diverse);
    EXPECT_EQ(g2.table, UtilityTable::preset(GameKind::Diverse));
}

TEST(StartGame, ResetsGridToSeatRasterAndClearsFlags) {
    Session s = with_players(13);
    const GridState seated = s.grid();
    s.start_game(false, std::nullopt, 0);
    s.handle_move(13, Direction::Down, 100);
    s.set_satisfied(1, true, 200);
    s.end_game(300);
    EXPECT_NE(s.grid(), seated);
    s.start_game(false, std::nullopt, 1000);
    EXPECT_EQ(s.grid(), seated);
    EXPECT_TRUE(s.satisfied().empty());
    EXPECT_EQ(s.clock_ms(1000), 0);
    EXPECT_EQ(s.header().roster.size(), 13u);
    EXPECT_EQ(s.header().game, 2);
}

TEST(HandleMove, BlockedEdgeMoveIsRejected) {
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 0);
    const GridState before = s.grid();
    const MoveOutcome o = s.handle_move(1, Direction::Up, 500);
    EXPECT_FALSE(o.event.accepted);
    EXPECT_TRUE(o.logged);
    EXPECT_EQ(o.event.to, o.event.from);
    EXPECT_EQ(s.grid(), before);
    EXPECT_EQ(s.events().size(), 1u);
}

TEST(HandleMove, MoveOutsideAGameIsRejectedAndNotLogged) {
    Session s = with_players(13);
    const MoveOutcome o = s.handle_move(13, Direction::Down, 0);
    EXPECT_FALSE(o.event.accepted);
    EXPECT_FALSE(o.logged);
    EXPECT_THROW(s.handle_move(30, Direction::Down, 0), ProtocolError);
}

TEST(HandleMove, ContendedCellIsSerialized) {
    // Rows 0 and 1 full, 13 at (2,0). 8 (down from (1,1)) and 13 (right from
    // (2,0)) both want (2,1) at the same instant.
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 0);
    const MoveOutcome first = s.handle_move(8, Direction::Down, 1000);
    const MoveOutcome second = s.handle_move(13, Direction::Right, 1000);
    EXPECT_EQ(first.event.to, (Cell{2, 1}));
    // Re-evaluated against the new board: 13 jumps past 8.
    EXPECT_EQ(second.event.to, (Cell{2, 2}));
    EXPECT_LT(first.event.seq, second.event.seq);
    EXPECT_NO_THROW(replay(GameLog{s.header(), s.events(), std::nullopt}));
}

TEST(HandleMove, AcceptedMoveClearsEveryonesFlag) {
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 0);
    s.set_satisfied(1, true, 10);
    s.set_satisfied(2, true, 10);
    s.handle_move(1, Direction::Up, 20);  // rejected, flags stay
    EXPECT_EQ(s.satisfied().size(), 2u);
    s.handle_move(13, Direction::Down, 30);
    EXPECT_TRUE(s.satisfied().empty());
}

TEST(HandleMove, SustainedPlayReplaysExactly) {
    // 3.8 moves per second on average for the full two minutes.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Session s = with_players(20, seed, static_cast<int>(seed));
        s.start_game(false, std::nullopt, 0);
        Rng rng(seed);
        std::int64_t t = 0;
        std::optional<GameRecord> ended;
        while (!ended) {
            t += static_cast<std::int64_t>(rng.below(526));  // mean gap ~263 ms
            const AgentId a = static_cast<AgentId>(1 + rng.below(20));
            MoveOutcome o = s.handle_move(a, kDirections[rng.below(4)], t);
            if (o.expired) ended = std::move(o.expired);
            ASSERT_TRUE(oracle::consistent(s.grid()));
        }
        EXPECT_EQ(ended->log.end->tMs, 120'000);
        EXPECT_EQ(ended->log.end->reason, "timeout");
        EXPECT_GT(ended->log.events.size(), 400u);
        for (const auto& e : ended->log.events) ASSERT_LE(e.tMs, 120'000);
        const ReplayResult r = replay(ended->log);
        EXPECT_EQ(r.finalGrid, s.grid());
        EXPECT_EQ(r.scores, ended->log.end->scores);
    }
}

TEST(Satisfied, EveryoneSatisfiedEndsTheGameEarly) {
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 1'000'000);
    std::optional<GameRecord> rec;
    for (int id = 1; id <= 12; ++id) ASSERT_FALSE(s.set_satisfied(id, true, 1'045'000).has_value());
    s.set_satisfied(5, false, 1'045'000);
    s.set_satisfied(5, true, 1'045'000);
    rec = s.set_satisfied(13, true, 1'045'000);
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->log.end->tMs, 45'000);
    EXPECT_EQ(rec->log.end->reason, "satisfied");
    EXPECT_EQ(s.phase(), Phase::Intermission);
    EXPECT_THROW(s.set_satisfied(1, true, 1'046'000), SessionError);
}

TEST(Satisfied, NoEarlyStopEndsAtTwoMinutes) {
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 0);
    EXPECT_FALSE(s.tick(119'999).has_value());
    EXPECT_EQ(s.clock_ms(119'999), 119'999);
    const auto rec = s.tick(120'040);
    ASSERT_TRUE(rec.has_value());
    EXPECT_EQ(rec->log.end->tMs, 120'000);
    EXPECT_EQ(rec->log.end->reason, "timeout");
}

TEST(Satisfied, LateMoveDoesNotExtendTheGame) {
    Session s = with_players(13);
    s.start_game(false, std::nullopt, 0);
    for (int id = 1; id <= 12; ++id) s.set_satisfied(id, true, 117'000);
    const MoveOutcome o = s.handle_move(13, Direction::Down, 118'000);
    EXPECT_TRUE(o.event.accepted);
    EXPECT_TRUE(s.satisfied().empty());
    const MoveOutcome late = s.handle_move(13, Direction::Down, 120'500);
    ASSERT_TRUE(late.expired.has_value());
    EXPECT_FALSE(late.logged);
    EXPECT_EQ(late.expired->log.end->tMs, 120'000);
    EXPECT_EQ(late.expired->log.events.size(), 1u);
}

TEST(Satisfied, EmptyRosterPlaysTheFullGame) {
    Session s = Session::create(config_with(0));
    s.start_game(false, std::nullopt, 0);
    const auto rec = s.tick(120'000);
    ASSERT_TRUE(rec.has_value());
    EXPECT_TRUE(rec->log.events.empty());
    EXPECT_EQ(rec->log.end->tMs, 120'000);
}

TEST(FinalScores, SumsTheFourScoredGames) {
    Session s = with_players(13, 3, 0);
    s.start_game(true, std::nullopt, 0);
    all_satisfied(s, 1000);
    std::map<AgentId, int> expected;
    for (int g = 0; g < 4; ++g) {
        EXPECT_THROW(s.final_scores(), SessionError);
        s.start_game(false, std::nullopt, 0);
        s.handle_move(7 + g, Direction::Down, 100);
        const GameRecord rec = all_satisfied(s, 2000);
        for (const auto& [id, pts] : rec.log.end->scores) expected[id] += pts;
    }
    const auto totals = s.final_scores();
    ASSERT_EQ(totals.size(), 13u);
    for (std::size_t i = 0; i < totals.size(); ++i) {
        EXPECT_EQ(totals[i].total, expected[totals[i].id]);
        if (i > 0) {
            EXPECT_GE(totals[i - 1].total, totals[i].total);
            if (totals[i - 1].total == totals[i].total) EXPECT_LT(totals[i - 1].id, totals[i].id);  // join order
        }
    }
    s.show_final_scores();
    EXPECT_EQ(s.phase(), Phase::FinalScores);
}

TEST(FinalScores, HandComputedTotals) {
    // Joins 1, 36, 2 -> colors A, B, A. Players 1 and 2 sit side by side (100% same),
    // 36 is alone in the far corner.
    Session s = Session::create(config_with(0, 0));  // Same, Diverse, SameAndDiverse, SameOrDifferent
    s.join(1);
    s.join(36);
    s.join(2);
    for (int g = 0; g < 4; ++g) {
        s.start_game(false, std::nullopt, 0);
        s.end_game(1000);
    }
    const auto totals = s.final_scores();
    ASSERT_EQ(totals.size(), 3u);
    // 100 + 5 + 5 + 100 for each of the pair, 4 x 5 for the loner.
    EXPECT_EQ(totals[0].id, 1);
    EXPECT_EQ(totals[0].total, 210);
    EXPECT_EQ(totals[1].id, 2);
    EXPECT_EQ(totals[1].total, 210);
    EXPECT_EQ(totals[2].id, 36);
    EXPECT_EQ(totals[2].total, 20);
}

TEST(FinalScores, TiesKeepJoinOrder) {
    Session s = Session::create(config_with(0));
    for (int id : {20, 2, 12}) s.join(id);
    for (int g = 0; g < 4; ++g) {
        s.start_game(false, std::nullopt, 0);
        s.end_game(1000);
    }
    const auto totals = s.final_scores();
    // All three are isolated: 5 points per game.
    ASSERT_EQ(totals.size(), 3u);
    EXPECT_EQ(totals[0].id, 20);
    EXPECT_EQ(totals[1].id, 2);
    EXPECT_EQ(totals[2].id, 12);
    EXPECT_EQ(totals[0].total, 20);
}
