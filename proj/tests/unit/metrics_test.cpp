#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic_logs.hpp"
#include "seglab/metrics.hpp"
#include "seglab/sim.hpp"

using namespace seglab;

namespace {

const UtilityTable kSame = UtilityTable::preset(GameKind::Same);

LogHeader header_for(const GridState& g, const UtilityTable& table) {
    LogHeader h;
    h.session = "t";
    h.game = 1;
    h.table = table;
    for (AgentId id : g.agents()) h.roster.push_back({id, g.color_of(id), std::nullopt, g.cell_of(id)});
    return h;
}

}  // namespace

TEST(Snapshot, PairAndIsolatedAgent) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Yellow, {1, 1});
    g.place(3, Color::Blue, {4, 4});
    const auto ex = snapshot(g, kSame);
    EXPECT_DOUBLE_EQ(*ex.segregation, 100.0);
    EXPECT_DOUBLE_EQ(ex.avgScore, (100.0 + 100.0 + 5.0) / 3.0);
    EXPECT_DOUBLE_EQ(ex.avgNeighbors, 2.0 / 3.0);
    EXPECT_NEAR(*snapshot(g, kSame, IsolatedAgents::CountAsZero).segregation, 200.0 / 3.0, 1e-12);
}

TEST(Snapshot, NobodyWithNeighborsHasUndefinedSegregation) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Blue, {5, 5});
    const auto m = snapshot(g, kSame);
    EXPECT_FALSE(m.segregation.has_value());
    EXPECT_DOUBLE_EQ(m.avgScore, 5.0);
    EXPECT_THROW(snapshot(GridState{}, kSame), DomainError);
}

TEST(Snapshot, FullBoardDegreeIsTwiceTheAdjacentPairs) {
    // 6x6 king graph: 2*5*6 orthogonal + 2*5*5 diagonal = 110 edges.
    EXPECT_DOUBLE_EQ(snapshot(initial_placement(36, 1), kSame).avgNeighbors, 220.0 / 36.0);
}

TEST(Snapshot, MatchesOracleAverages) {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const GridState g = oracle::random_board(1 + static_cast<int>(rng.below(36)), rng);
        const auto b = oracle::board_of(g);
        double deg = 0, pct = 0;
        int withNb = 0;
        for (AgentId a : g.agents()) {
            const auto nb = oracle::neighbors(b, g.cell_of(a).index());
            deg += static_cast<double>(nb.size());
            if (nb.empty()) continue;
            int same = 0;
            for (int o : nb) same += b.color.at(o) == b.color.at(a);
            pct += 100.0 * same / static_cast<double>(nb.size());
            ++withNb;
        }
        const auto m = snapshot(g, kSame);
        ASSERT_NEAR(m.avgNeighbors, deg / g.size(), 1e-12);
        if (withNb == 0)
            ASSERT_FALSE(m.segregation.has_value());
        else
            ASSERT_NEAR(*m.segregation, pct / withNb, 1e-9);
    }
}

TEST(TimeSeries, EmptyLogIsOnePoint) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    GameLog log;
    log.header = header_for(g, kSame);
    const auto s = time_series(log, kSame);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].tMs, 0);
}

TEST(TimeSeries, SingleChangePoint) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Yellow, {0, 2});
    GameLog log;
    log.header = header_for(g, kSame);
    log.events = {synthetic::move(1, 2500, 1, Direction::Right, {0, 0}, {0, 1}, 100)};
    log.end = GameEnd{5000, "timeout", {{1, 100}, {2, 100}}};
    const auto s = time_series(log, kSame);
    ASSERT_EQ(s.size(), 6u);
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(s[static_cast<std::size_t>(i)].tMs, 1000 * i);
        EXPECT_DOUBLE_EQ(s[static_cast<std::size_t>(i)].metrics.avgNeighbors, i < 3 ? 0.0 : 1.0);
    }
}

TEST(TimeSeries, EventOnASampleTimeIsIncluded) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Yellow, {0, 2});
    GameLog log;
    log.header = header_for(g, kSame);
    log.events = {synthetic::move(1, 2000, 1, Direction::Right, {0, 0}, {0, 1}, 100)};
    log.end = GameEnd{2500, "satisfied", {{1, 100}, {2, 100}}};
    const auto s = time_series(log, kSame);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_DOUBLE_EQ(s[2].metrics.avgNeighbors, 1.0);
    EXPECT_EQ(s[3].tMs, 2500);
}

TEST(TimeSeries, EventAfterTheEndIsAnError) {
    GameLog log = synthetic::latency_log();
    log.end->tMs = 11000;
    EXPECT_THROW(time_series(log, kSame), ReplayError);
    EXPECT_THROW(latency_table(log), ReplayError);
}

TEST(TimeSeries, LastPointOfSimulationExportIsTheFinalState) {
    SimulationParams p;
    p.table = UtilityTable::preset(GameKind::SameAndDiverse);
    p.periods = 3000;
    GameLog log;
    const RunResult r = run(p, 17, &log);
    const auto s = time_series(log, p.table, 250);
    EXPECT_EQ(s.back().tMs, 3000);
    EXPECT_EQ(s.back().metrics, r.finalMetrics);
    EXPECT_EQ(s.front().metrics, r.trace.front().metrics);
}

TEST(Latency, SyntheticLogHandComputed) {
    const LatencyTable t = latency_table(synthetic::latency_log());
    EXPECT_DOUBLE_EQ(t.at({1, 1}).totalSeconds, 10.0);
    EXPECT_EQ(t.at({1, 1}).moveOuts, 2);
    EXPECT_DOUBLE_EQ(*t.at({1, 1}).meanLatency(), 5.0);
    EXPECT_DOUBLE_EQ(*t.at({0, 0}).meanLatency(), 14.0);
    EXPECT_DOUBLE_EQ(t.at({1, 0}).totalSeconds, 10.0);
    EXPECT_FALSE(t.at({1, 0}).meanLatency().has_value());
    EXPECT_DOUBLE_EQ(t.at({0, 1}).totalSeconds, 26.0);
    EXPECT_FALSE(t.at({0, 1}).meanLatency().has_value());
    EXPECT_FALSE(t.at({5, 3}).meanLatency().has_value());
    EXPECT_DOUBLE_EQ(t.totalSeconds(), 60.0);
}

TEST(Latency, TotalTimeIsAgentsTimesDuration) {
    for (Policy policy : {Policy::BestResponse, Policy::RandomRelocation}) {
        SimulationParams p;
        p.policy = policy;
        p.table = UtilityTable::preset(GameKind::Diverse);
        p.periods = 4000;
        GameLog log;
        run(p, 3, &log);
        const LatencyTable t = latency_table(log);
        EXPECT_DOUBLE_EQ(t.totalSeconds(), 20 * 4000 / 1000.0);
        std::int64_t outs = 0;
        for (const auto& [_, cell] : t.cells()) outs += cell.moveOuts;
        EXPECT_EQ(outs, static_cast<std::int64_t>(log.events.size()));
    }
}

TEST(Latency, MergePoolsGames) {
    LatencyTable a = latency_table(synthetic::latency_log());
    a.merge(latency_table(synthetic::latency_log()));
    EXPECT_DOUBLE_EQ(a.totalSeconds(), 120.0);
    EXPECT_DOUBLE_EQ(*a.at({1, 1}).meanLatency(), 5.0);
    EXPECT_EQ(a.at({0, 0}).moveOuts, 2);
}

TEST(Transition, SyntheticLogHandComputed) {
    const TransitionMatrix m = transition_matrix(synthetic::transition_log(), synthetic::fifty_table());
    EXPECT_EQ(m.rows(), std::vector<int>{50});
    EXPECT_NEAR(m.frequency(50, 100), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.frequency(50, 5), 1.0 / 3.0, 1e-12);
    EXPECT_EQ(m.frequency(50, 50), 0.0);
    EXPECT_EQ(m.frequency(5, 100), 0.0);
    EXPECT_EQ(m.columns(), (std::vector<int>{5, 100}));
}

TEST(Transition, RowsSumToOne) {
    SimulationParams p;
    p.policy = Policy::RandomRelocation;
    p.table = UtilityTable::preset(GameKind::SameAndDiverse);
    p.periods = 5000;
    GameLog log;
    run(p, 9, &log);
    const TransitionMatrix m = transition_matrix(log, p.table);
    std::int64_t total = 0;
    for (int r : m.rows()) {
        double sum = 0;
        for (int c : m.columns()) sum += m.frequency(r, c);
        EXPECT_NEAR(sum, 1.0, 1e-9);
        total += m.row_total(r);
    }
    EXPECT_EQ(total, static_cast<std::int64_t>(log.events.size()));
}

TEST(Adjacency, Examples) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Blue, {0, 1});
    g.place(3, Color::Yellow, {5, 5});
    // 1: neighbor 2 adjacent -> 100; 2: 1 yes, 3 no -> 50; 3: 2 no -> 0.
    EXPECT_DOUBLE_EQ(*adjacency_score(g, {1, 2, 3}), 50.0);
    // No left/right classmates anywhere.
    EXPECT_FALSE(adjacency_score(g, {1, std::nullopt, 2, std::nullopt, 3}).has_value());
    // Seats 5 and 6 are in different rows.
    Seating acrossRows(7);
    acrossRows[5] = 1;
    acrossRows[6] = 2;
    acrossRows[0] = 3;
    EXPECT_FALSE(adjacency_score(g, acrossRows).has_value());
}

TEST(Adjacency, RosterMismatchIsADomainError) {
    GridState g;
    g.place(1, Color::Yellow, {0, 0});
    g.place(2, Color::Blue, {0, 1});
    EXPECT_THROW(adjacency_score(g, {1, 2, 3}), DomainError);
    EXPECT_THROW(adjacency_score(g, {1}), DomainError);
    EXPECT_THROW(adjacency_score(g, {1, 1}), DomainError);
}

TEST(Adjacency, BaselineMatchesUniformPlacementProbability) {
    // Two distinct cells are king-adjacent with probability 110 / C(36,2) = 11/63.
    const double expected = 100.0 * 11.0 / 63.0;
    for (int n : {13, 20, 25}) EXPECT_NEAR(adjacency_baseline(n, 20'000, 5), expected, 0.5);
}

TEST(Adjacency, BaselineConvergesWithTrials) {
    const double a = adjacency_baseline(20, 10'000, 1);
    const double b = adjacency_baseline(20, 20'000, 1);
    EXPECT_LT(std::abs(a - b), 0.5);
    EXPECT_THROW(adjacency_baseline(1, 10, 0), DomainError);
    EXPECT_THROW(adjacency_baseline(20, 0, 0), DomainError);
}

TEST(Adjacency, SeatingFromHeader) {
    LogHeader h;
    h.roster = {{4, Color::Yellow, 3, {0, 3}}, {1, Color::Blue, 0, {0, 0}}, {9, Color::Blue, std::nullopt, {1, 1}}};
    const Seating s = seating_from(h);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0], 1);
    EXPECT_FALSE(s[1].has_value());
    EXPECT_EQ(s[3], 4);
}
