#include "seglab/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "seglab/rng.hpp"

namespace seglab {

MetricsSnapshot snapshot(const GridState& grid, const UtilityTable& table, IsolatedAgents isolated) {
    if (grid.size() == 0) throw DomainError("metrics of an empty board are undefined");
    double pctSum = 0.0;
    int pctCount = 0;
    long scoreSum = 0;
    long degreeSum = 0;
    for (AgentId id : grid.agents()) {
        const NeighborCounts c = neighbor_counts(grid, id);
        degreeSum += c.total();
        scoreSum += score(table, c);
        if (auto p = percent_same(c)) {
            pctSum += *p;
            ++pctCount;
        } else if (isolated == IsolatedAgents::CountAsZero) {
            ++pctCount;
        }
    }
    const double n = grid.size();
    MetricsSnapshot m;
    if (pctCount > 0) m.segregation = pctSum / pctCount;
    m.avgScore = static_cast<double>(scoreSum) / n;
    m.avgNeighbors = static_cast<double>(degreeSum) / n;
    return m;
}

std::vector<SeriesPoint> time_series(const GameLog& log, const UtilityTable& table, std::int64_t sampleMs) {
    if (sampleMs <= 0) throw DomainError("sampleMs must be positive");
    Replayer replayer(log.header);
    const std::int64_t end = log.duration_ms();
    std::vector<SeriesPoint> out;
    std::size_t next = 0;
    auto advance_to = [&](std::int64_t t) {
        while (next < log.events.size() && log.events[next].tMs <= t) {
            replayer.apply(log.events[next], next);
            ++next;
        }
    };
    for (std::int64_t t = 0;; t += sampleMs) {
        const std::int64_t at = std::min(t, end);
        advance_to(at);
        out.push_back({at, snapshot(replayer.grid(), table)});
        if (at >= end) break;
    }
    if (next < log.events.size()) throw ReplayError(next, "event after the end of the game");
    return out;
}

LatencyCell LatencyTable::at(NeighborCounts config) const {
    auto it = cells_.find(config);
    return it == cells_.end() ? LatencyCell{} : it->second;
}

double LatencyTable::totalSeconds() const noexcept {
    std::int64_t ms = 0;
    for (const auto& [_, v] : ms_) ms += v;
    return static_cast<double>(ms) / 1000.0;
}

void LatencyTable::accrue(NeighborCounts config, std::int64_t ms) {
    ms_[config] += ms;
    cells_[config].totalSeconds = static_cast<double>(ms_[config]) / 1000.0;
}

void LatencyTable::count_move_out(NeighborCounts config) {
    ms_.try_emplace(config, 0);
    ++cells_[config].moveOuts;
}

void LatencyTable::merge(const LatencyTable& other) {
    for (const auto& [config, ms] : other.ms_) accrue(config, ms);
    for (const auto& [config, cell] : other.cells_) {
        ms_.try_emplace(config, 0);
        cells_[config].moveOuts += cell.moveOuts;
    }
}

LatencyTable latency_table(const GameLog& log) {
    Replayer replayer(log.header);
    const std::int64_t end = log.duration_ms();

    struct Observation {
        NeighborCounts config;
        std::int64_t since = 0;
    };
    std::map<AgentId, Observation> obs;
    for (AgentId id : replayer.grid().agents()) obs[id] = {neighbor_counts(replayer.grid(), id), 0};

    LatencyTable table;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const MoveEvent& e = log.events[i];
        replayer.apply(e, i);
        if (e.tMs > end) throw ReplayError(i, "event after the end of the game");
        if (!e.accepted) continue;
        for (auto& [id, o] : obs) {
            const NeighborCounts now = neighbor_counts(replayer.grid(), id);
            const bool self = id == e.agent;
            if (!self && now == o.config) continue;
            table.accrue(o.config, e.tMs - o.since);
            if (self) table.count_move_out(o.config);
            o = {now, e.tMs};
        }
    }
    for (const auto& [id, o] : obs) table.accrue(o.config, end - o.since);
    return table;
}

void TransitionMatrix::merge(const TransitionMatrix& other) {
    for (const auto& [row, cols] : other.counts_)
        for (const auto& [col, n] : cols) counts_[row][col] += n;
}

std::int64_t TransitionMatrix::count(int moveOut, int moveIn) const {
    auto r = counts_.find(moveOut);
    if (r == counts_.end()) return 0;
    auto c = r->second.find(moveIn);
    return c == r->second.end() ? 0 : c->second;
}

std::int64_t TransitionMatrix::row_total(int moveOut) const {
    auto r = counts_.find(moveOut);
    if (r == counts_.end()) return 0;
    std::int64_t total = 0;
    for (const auto& [_, n] : r->second) total += n;
    return total;
}

double TransitionMatrix::frequency(int moveOut, int moveIn) const {
    const std::int64_t total = row_total(moveOut);
    if (total == 0) return 0.0;
    return static_cast<double>(count(moveOut, moveIn)) / static_cast<double>(total);
}

std::vector<int> TransitionMatrix::rows() const {
    std::vector<int> out;
    for (const auto& [row, _] : counts_) out.push_back(row);
    return out;
}

std::vector<int> TransitionMatrix::columns() const {
    std::set<int> cols;
    for (const auto& [_, row] : counts_)
        for (const auto& [col, __] : row) cols.insert(col);
    return {cols.begin(), cols.end()};
}

TransitionMatrix transition_matrix(const GameLog& log, const UtilityTable& table) {
    Replayer replayer(log.header);
    TransitionMatrix m;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const MoveEvent& e = log.events[i];
        const int before = replayer.grid().contains(e.agent)
                               ? score(table, neighbor_counts(replayer.grid(), e.agent))
                               : 0;
        replayer.apply(e, i);
        if (e.accepted) m.add(before, score(table, neighbor_counts(replayer.grid(), e.agent)));
    }
    return m;
}

namespace {

bool grid_adjacent(Cell a, Cell b) {
    return a != b && std::abs(a.row - b.row) <= 1 && std::abs(a.col - b.col) <= 1;
}

GridState random_grid(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::array<int, kCells> cells{};
    for (int i = 0; i < kCells; ++i) cells[static_cast<std::size_t>(i)] = i;
    shuffle(cells.begin(), cells.end(), rng);
    GridState g;
    for (int i = 0; i < n; ++i) g.place(i + 1, Color::Yellow, Cell::from_index(cells[static_cast<std::size_t>(i)]));
    return g;
}

}  // namespace

std::optional<double> adjacency_score(const GridState& finalGrid, const Seating& seating) {
    if (seating.size() > static_cast<std::size_t>(kCells)) throw DomainError("more seats than the classroom holds");
    std::set<AgentId> seated;
    for (const auto& s : seating) {
        if (!s) continue;
        if (!finalGrid.contains(*s)) throw DomainError("seated agent " + std::to_string(*s) + " is not on the grid");
        if (!seated.insert(*s).second) throw DomainError("agent " + std::to_string(*s) + " has two seats");
    }
    if (static_cast<int>(seated.size()) != finalGrid.size())
        throw DomainError("seating and grid rosters differ");

    auto seat_at = [&](int row, int col) -> std::optional<AgentId> {
        if (col < 0 || col >= kSide) return std::nullopt;
        const auto idx = static_cast<std::size_t>(row * kSide + col);
        return idx < seating.size() ? seating[idx] : std::nullopt;
    };

    double sum = 0.0;
    int players = 0;
    for (std::size_t i = 0; i < seating.size(); ++i) {
        if (!seating[i]) continue;
        const int row = static_cast<int>(i) / kSide;
        const int col = static_cast<int>(i) % kSide;
        const Cell mine = finalGrid.cell_of(*seating[i]);
        int classmates = 0;
        int alsoNeighbors = 0;
        for (int dc : {-1, 1}) {
            if (auto other = seat_at(row, col + dc)) {
                ++classmates;
                if (grid_adjacent(mine, finalGrid.cell_of(*other))) ++alsoNeighbors;
            }
        }
        if (classmates == 0) continue;
        sum += 100.0 * alsoNeighbors / classmates;
        ++players;
    }
    if (players == 0) return std::nullopt;
    return sum / players;
}

double adjacency_baseline(int n, int trials, std::uint64_t seed) {
    if (n < 2 || n > kCells) throw DomainError("adjacency baseline needs 2..36 players");
    if (trials < 1) throw DomainError("trials must be positive");
    Seating seating(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seating[static_cast<std::size_t>(i)] = i + 1;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        const GridState g = random_grid(n, derive_seed(seed, static_cast<std::uint64_t>(t)));
        sum += *adjacency_score(g, seating);
    }
    return sum / trials;
}

Seating seating_from(const LogHeader& header) {
    Seating s;
    for (const auto& r : header.roster) {
        if (!r.seat) continue;
        if (*r.seat < 0 || *r.seat >= kCells) throw DomainError("seat index out of range");
        if (s.size() <= static_cast<std::size_t>(*r.seat)) s.resize(static_cast<std::size_t>(*r.seat) + 1);
        s[static_cast<std::size_t>(*r.seat)] = r.id;
    }
    return s;
}

}  // namespace seglab
