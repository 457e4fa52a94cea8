#include "seglab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace seglab {

std::string_view to_string(Policy p) noexcept {
    return p == Policy::BestResponse ? "best-response" : "random-relocation";
}

std::optional<Policy> parse_policy(std::string_view s) noexcept {
    if (s == "best-response") return Policy::BestResponse;
    if (s == "random-relocation") return Policy::RandomRelocation;
    return std::nullopt;
}

void SimulationParams::validate() const {
    if (nAgents < 1 || nAgents > kCells) throw DomainError("nAgents must be in 1..36");
    if (periods < 0) throw DomainError("periods must be non-negative");
    if (runs < 1) throw DomainError("runs must be at least 1");
    if (recordEvery < 1) throw DomainError("recordEvery must be at least 1");
}

GridState initial_placement(int nAgents, std::uint64_t seed, Placement placement) {
    if (nAgents < 1 || nAgents > kCells)
        throw DomainError("cannot place " + std::to_string(nAgents) + " agents on 36 cells");
    Rng rng(seed);
    const Color first = rng.coin() ? Color::Yellow : Color::Blue;
    std::array<int, kCells> cells{};
    std::iota(cells.begin(), cells.end(), 0);
    if (placement == Placement::UniformRandom) shuffle(cells.begin(), cells.end(), rng);
    GridState grid;
    for (AgentId id = 1; id <= nAgents; ++id) {
        const Color c = (id % 2 == 1) ? first : other(first);
        grid.place(id, c, Cell::from_index(cells[static_cast<std::size_t>(id - 1)]));
    }
    return grid;
}

GridState initial_placement(int nAgents, std::uint64_t seed) {
    return initial_placement(nAgents, seed, Placement::UniformRandom);
}

std::vector<Cell> candidate_set(const GridState& grid, AgentId agent) {
    const Cell here = grid.cell_of(agent);
    std::vector<Cell> out{here};
    for (Direction d : kDirections)
        if (auto t = move_target(grid, here, d)) out.push_back(*t);
    return out;
}

namespace {

int evaluate_unchecked(const GridState& grid, AgentId agent, Cell cell, const UtilityTable& table) {
    const Cell origin = grid.cell_of(agent);
    return score(table, neighbor_counts_at(grid, cell, grid.color_of(agent), origin));
}

}  // namespace

int evaluate_candidate(const GridState& grid, AgentId agent, Cell cell, const UtilityTable& table) {
    const auto cands = candidate_set(grid, agent);
    if (std::find(cands.begin(), cands.end(), cell) == cands.end())
        throw DomainError("cell (" + std::to_string(cell.row) + "," + std::to_string(cell.col) +
                          ") is not a candidate for agent " + std::to_string(agent));
    return evaluate_unchecked(grid, agent, cell, table);
}

Cell best_response_choice(const GridState& grid, AgentId agent, const UtilityTable& table, Rng& rng) {
    const auto cands = candidate_set(grid, agent);
    std::array<Cell, 5> best{};
    std::size_t nBest = 0;
    int bestScore = -1;
    for (Cell c : cands) {
        const int s = evaluate_unchecked(grid, agent, c, table);
        if (s > bestScore) {
            bestScore = s;
            nBest = 0;
        }
        if (s == bestScore) best[nBest++] = c;
    }
    if (nBest == 1) return best[0];
    return best[rng.below(nBest)];
}

Cell random_relocation_choice(const GridState& grid, AgentId agent, const UtilityTable& table, Rng& rng) {
    const Cell here = grid.cell_of(agent);
    if (score(table, neighbor_counts(grid, agent)) == table.max()) return here;
    std::array<Cell, 4> targets{};
    std::size_t n = 0;
    for (Direction d : kDirections)
        if (auto t = move_target(grid, here, d)) targets[n++] = *t;
    if (n == 0) return here;
    return targets[rng.below(n)];
}

StepOutcome advance(GridState& grid, const SimulationParams& params, Rng& rng) {
    const auto ids = grid.agents();
    StepOutcome out;
    out.agent = ids[rng.below(ids.size())];
    out.from = grid.cell_of(out.agent);
    out.to = params.policy == Policy::BestResponse ? best_response_choice(grid, out.agent, params.table, rng)
                                                   : random_relocation_choice(grid, out.agent, params.table, rng);
    grid.relocate(out.agent, out.to);
    return out;
}

GridState step(GridState state, const SimulationParams& params, Rng& rng) {
    advance(state, params, rng);
    return state;
}

std::uint64_t run_seed(std::uint64_t masterSeed, int index) noexcept {
    return derive_seed(masterSeed, static_cast<std::uint64_t>(index));
}

namespace {

LogHeader simulation_header(const SimulationParams& params, std::uint64_t seed, const GridState& grid) {
    LogHeader h;
    h.source = "simulation";
    h.session = "sim";
    h.table = params.table;
    h.seed = seed;
    for (AgentId id : grid.agents()) h.roster.push_back({id, grid.color_of(id), std::nullopt, grid.cell_of(id)});
    h.configJson = nlohmann::json{{"policy", to_string(params.policy)},
                                  {"n", params.nAgents},
                                  {"periods", params.periods},
                                  {"placement", params.placement == Placement::SeatRaster ? "seat-raster" : "uniform"}}
                       .dump();
    return h;
}

}  // namespace

RunResult run(const SimulationParams& params, std::uint64_t seed, GameLog* log) {
    params.validate();
    RunResult result;
    result.seed = seed;
    result.initialGrid = initial_placement(params.nAgents, seed, params.placement);
    GridState grid = result.initialGrid;
    Rng rng(derive_seed(seed, 0x5eedULL));

    if (log) {
        *log = GameLog{};
        log->header = simulation_header(params, seed, grid);
    }

    result.trace.reserve(static_cast<std::size_t>(params.periods / params.recordEvery + 1));
    result.trace.push_back({0, snapshot(grid, params.table)});
    for (std::int64_t p = 1; p <= params.periods; ++p) {
        const StepOutcome o = advance(grid, params, rng);
        if (o.moved()) {
            ++result.moves;
            if (log) {
                MoveEvent e;
                e.seq = static_cast<std::uint64_t>(result.moves);
                e.tMs = p;
                e.agent = o.agent;
                e.dir = *direction_between(o.from, o.to);
                e.from = o.from;
                e.to = o.to;
                e.accepted = true;
                e.scoreAfter = score(params.table, neighbor_counts(grid, o.agent));
                log->events.push_back(e);
            }
        }
        if (p % params.recordEvery == 0) result.trace.push_back({p, snapshot(grid, params.table)});
    }
    result.finalGrid = grid;
    result.finalMetrics = snapshot(grid, params.table);
    if (log) log->end = GameEnd{params.periods, "periods", scores_of(grid, params.table)};
    return result;
}

RunResult run(const SimulationParams& params) { return run(params, run_seed(params.seed, 0)); }

Stat describe(const std::vector<double>& values) {
    Stat s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

BatchSummary batch(const SimulationParams& params, unsigned threads) {
    params.validate();
    BatchSummary out;
    out.runs.resize(static_cast<std::size_t>(params.runs));
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(params.runs));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < params.runs; i = next++)
            out.runs[static_cast<std::size_t>(i)] = run(params, run_seed(params.seed, i));
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::vector<double> seg, avgScore, avgNb;
    for (const auto& r : out.runs) {
        if (r.finalMetrics.segregation) seg.push_back(*r.finalMetrics.segregation);
        avgScore.push_back(r.finalMetrics.avgScore);
        avgNb.push_back(r.finalMetrics.avgNeighbors);
    }
    out.segregation = describe(seg);
    out.avgScore = describe(avgScore);
    out.avgNeighbors = describe(avgNb);
    return out;
}

}  // namespace seglab
