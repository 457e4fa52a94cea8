// sim.hpp - batch agent-based dynamics on the 6x6 board.
//
// One period: draw one agent uniformly at random and let the policy pick where
// it stands next. BestResponse scores the current cell and the jump target in
// each of the four directions and moves to a uniformly drawn argmax.
// RandomRelocation leaves agents at the table maximum alone and moves every
// other agent to a uniformly drawn jump target.
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "seglab/event_log.hpp"
#include "seglab/grid.hpp"
#include "seglab/metrics.hpp"
#include "seglab/rng.hpp"
#include "seglab/utility_table.hpp"

namespace seglab {

enum class Policy { BestResponse, RandomRelocation };

/// "best-response", "random-relocation".
std::string_view to_string(Policy p) noexcept;
std::optional<Policy> parse_policy(std::string_view s) noexcept;

enum class Placement {
    UniformRandom,  ///< distinct cells drawn uniformly
    SeatRaster,     ///< agent k on cell k-1, as in a freshly seated classroom
};

struct SimulationParams {
    Policy policy = Policy::BestResponse;
    UtilityTable table = UtilityTable::preset(GameKind::Same);
    int nAgents = 20;
    std::int64_t periods = 10'000;
    int runs = 100;
    std::uint64_t seed = 0;
    /// Trace sampling stride in periods.
    std::int64_t recordEvery = 1'000;
    Placement placement = Placement::UniformRandom;

    /// Throws DomainError with the first violated constraint.
    void validate() const;
};

/// Agents 1..n on distinct uniformly drawn cells. Colors alternate by id
/// starting from a coin-flipped color, so an odd n gets a random majority.
GridState initial_placement(int nAgents, std::uint64_t seed);
GridState initial_placement(int nAgents, std::uint64_t seed, Placement placement);

/// Current cell followed by the jump targets Up, Down, Left, Right that exist.
std::vector<Cell> candidate_set(const GridState& grid, AgentId agent);

/// Score `agent` would get standing on `cell` with its origin treated as empty.
/// Throws DomainError if `cell` is not a candidate.
int evaluate_candidate(const GridState& grid, AgentId agent, Cell cell, const UtilityTable& table);

Cell best_response_choice(const GridState& grid, AgentId agent, const UtilityTable& table, Rng& rng);
Cell random_relocation_choice(const GridState& grid, AgentId agent, const UtilityTable& table, Rng& rng);

struct StepOutcome {
    AgentId agent = 0;
    Cell from{};
    Cell to{};

    bool moved() const noexcept { return from != to; }
};

/// One period applied in place.
StepOutcome advance(GridState& grid, const SimulationParams& params, Rng& rng);

GridState step(GridState state, const SimulationParams& params, Rng& rng);

struct TracePoint {
    std::int64_t period = 0;
    MetricsSnapshot metrics;
};

struct RunResult {
    GridState initialGrid;
    GridState finalGrid;
    MetricsSnapshot finalMetrics;
    /// Sampled at periods 0, recordEvery, 2*recordEvery, ...; floor(periods/recordEvery)+1 points.
    std::vector<TracePoint> trace;
    std::uint64_t seed = 0;
    std::int64_t moves = 0;
};

/// Seed used for run `index` of a batch.
std::uint64_t run_seed(std::uint64_t masterSeed, int index) noexcept;

/// One run with the given stream seed. If `log` is non-null, every relocation
/// is appended as an accepted MoveEvent stamped with its period number.
RunResult run(const SimulationParams& params, std::uint64_t seed, GameLog* log = nullptr);
/// Run 0 of a batch.
RunResult run(const SimulationParams& params);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  ///< sample standard deviation (n-1)
    int count = 0;
};

struct BatchSummary {
    std::vector<RunResult> runs;  ///< ordered by run index
    Stat segregation;
    Stat avgScore;
    Stat avgNeighbors;
};

/// params.runs independent runs; run i uses run_seed(params.seed, i). Results
/// do not depend on `threads`.
BatchSummary batch(const SimulationParams& params, unsigned threads = 0);

Stat describe(const std::vector<double>& values);

}  // namespace seglab
