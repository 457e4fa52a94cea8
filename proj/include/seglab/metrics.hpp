// metrics.hpp - outcome and behavioral measures over board snapshots and game logs.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "seglab/event_log.hpp"
#include "seglab/grid.hpp"
#include "seglab/utility_table.hpp"

namespace seglab {

/// How agents with no neighbors enter the segregation mean.
enum class IsolatedAgents {
    Exclude,      ///< left out of the mean (default)
    CountAsZero,  ///< counted as 0% same
};

struct MetricsSnapshot {
    /// Mean percent-same; nullopt when no agent has a neighbor.
    std::optional<double> segregation;
    double avgScore = 0.0;
    /// Mean Moore-8 degree (clustering).
    double avgNeighbors = 0.0;

    friend bool operator==(const MetricsSnapshot&, const MetricsSnapshot&) = default;
};

/// Throws DomainError on an empty board.
MetricsSnapshot snapshot(const GridState& grid, const UtilityTable& table,
                         IsolatedAgents isolated = IsolatedAgents::Exclude);

struct SeriesPoint {
    std::int64_t tMs = 0;
    MetricsSnapshot metrics;
};

/// Snapshots at 0, sampleMs, 2*sampleMs, ... and at the game end. The state at
/// a sample time includes every event stamped at or before it.
std::vector<SeriesPoint> time_series(const GameLog& log, const UtilityTable& table, std::int64_t sampleMs = 1000);

struct LatencyCell {
    double totalSeconds = 0.0;
    std::int64_t moveOuts = 0;

    std::optional<double> meanLatency() const noexcept {
        if (moveOuts == 0) return std::nullopt;
        return totalSeconds / static_cast<double>(moveOuts);
    }
};

/// Observation time and own-move departures per (same, different) neighbor
/// configuration, accumulated over every agent in a log.
class LatencyTable {
public:
    /// Zero cell (undefined mean) for configurations never observed.
    LatencyCell at(NeighborCounts config) const;
    const std::map<NeighborCounts, LatencyCell>& cells() const noexcept { return cells_; }
    double totalSeconds() const noexcept;

    void accrue(NeighborCounts config, std::int64_t ms);
    void count_move_out(NeighborCounts config);

    /// Adds another table's totals (pooling games of one kind).
    void merge(const LatencyTable& other);

private:
    std::map<NeighborCounts, std::int64_t> ms_;
    std::map<NeighborCounts, LatencyCell> cells_;
};

/// Time between configuration changes accrues to the configuration being left;
/// only an agent's own accepted moves count as move-outs.
LatencyTable latency_table(const GameLog& log);

class TransitionMatrix {
public:
    void add(int scoreBefore, int scoreAfter) { ++counts_[scoreBefore][scoreAfter]; }
    void merge(const TransitionMatrix& other);

    bool empty() const noexcept { return counts_.empty(); }
    /// Row-normalized frequency; 0 when the row or column was never seen.
    double frequency(int moveOut, int moveIn) const;
    std::int64_t count(int moveOut, int moveIn) const;
    std::int64_t row_total(int moveOut) const;
    std::vector<int> rows() const;
    /// Every move-in score that appears in any row, ascending.
    std::vector<int> columns() const;

private:
    std::map<int, std::map<int, std::int64_t>> counts_;
};

/// One (score before, score after) pair per accepted move.
TransitionMatrix transition_matrix(const GameLog& log, const UtilityTable& table);

/// Seat raster: index = seat (row-major 6 per row), nullopt = empty seat.
using Seating = std::vector<std::optional<AgentId>>;

/// Mean over seated players of the percentage of their left/right classroom
/// neighbors who are Moore-8 neighbors on the final grid. Players without an
/// occupied adjacent seat are skipped; nullopt if nobody qualifies.
std::optional<double> adjacency_score(const GridState& finalGrid, const Seating& seating);

/// The same statistic with players 1..n in seats 0..n-1 and the grid placement
/// drawn uniformly at random, averaged over `trials`.
double adjacency_baseline(int n, int trials, std::uint64_t seed);

/// Seating from a log header's roster (agents with a seat index).
Seating seating_from(const LogHeader& header);

}  // namespace seglab
