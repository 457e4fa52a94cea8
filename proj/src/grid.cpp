#include "seglab/grid.hpp"

#include <algorithm>

namespace seglab {

std::string_view to_string(Color c) noexcept { return c == Color::Yellow ? "yellow" : "blue"; }

std::optional<Color> parse_color(std::string_view s) noexcept {
    if (s == "yellow") return Color::Yellow;
    if (s == "blue") return Color::Blue;
    return std::nullopt;
}

std::string_view to_string(Direction d) noexcept {
    switch (d) {
        case Direction::Up: return "up";
        case Direction::Down: return "down";
        case Direction::Left: return "left";
        case Direction::Right: return "right";
    }
    return "?";
}

std::optional<Direction> parse_direction(std::string_view s) noexcept {
    for (Direction d : kDirections)
        if (to_string(d) == s) return d;
    return std::nullopt;
}

std::optional<Direction> direction_between(Cell from, Cell to) noexcept {
    if (from == to) return std::nullopt;
    if (from.row == to.row) return to.col > from.col ? Direction::Right : Direction::Left;
    if (from.col == to.col) return to.row > from.row ? Direction::Down : Direction::Up;
    return std::nullopt;
}

namespace {

void require_on_board(Cell c) {
    if (!c.on_board())
        throw DomainError("cell (" + std::to_string(c.row) + "," + std::to_string(c.col) + ") is off the board");
}

}  // namespace

void GridState::place(AgentId id, Color color, Cell cell) {
    require_on_board(cell);
    if (id < 1 || id > kMaxAgentId) throw DomainError("agent id " + std::to_string(id) + " out of range 1..36");
    if (contains(id)) throw DomainError("agent " + std::to_string(id) + " already on the board");
    if (!empty_at(cell)) throw DomainError("cell " + std::to_string(cell.index()) + " already occupied");
    agents_[static_cast<std::size_t>(id)] = Slot{true, color, cell};
    occupancy_[static_cast<std::size_t>(cell.index())] = id;
    ++count_;
}

void GridState::relocate(AgentId id, Cell to) {
    require_on_board(to);
    const Cell from = cell_of(id);
    if (from == to) return;
    if (!empty_at(to)) throw DomainError("cell " + std::to_string(to.index()) + " already occupied");
    occupancy_[static_cast<std::size_t>(from.index())] = 0;
    occupancy_[static_cast<std::size_t>(to.index())] = id;
    agents_[static_cast<std::size_t>(id)].cell = to;
}

std::optional<AgentId> GridState::occupant(Cell cell) const {
    require_on_board(cell);
    const AgentId id = occupancy_[static_cast<std::size_t>(cell.index())];
    if (id == 0) return std::nullopt;
    return id;
}

const GridState::Slot& GridState::slot(AgentId id) const {
    if (!contains(id)) throw DomainError("unknown agent " + std::to_string(id));
    return agents_[static_cast<std::size_t>(id)];
}

Cell GridState::cell_of(AgentId id) const { return slot(id).cell; }
Color GridState::color_of(AgentId id) const { return slot(id).color; }

std::vector<AgentId> GridState::agents() const {
    std::vector<AgentId> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (AgentId id = 1; id <= kMaxAgentId; ++id)
        if (agents_[static_cast<std::size_t>(id)].present) out.push_back(id);
    return out;
}

int GridState::count(Color c) const noexcept {
    int n = 0;
    for (const Slot& s : agents_)
        if (s.present && s.color == c) ++n;
    return n;
}

bool operator==(const GridState& a, const GridState& b) noexcept {
    if (a.occupancy_ != b.occupancy_) return false;
    for (std::size_t i = 0; i < a.agents_.size(); ++i) {
        const auto& x = a.agents_[i];
        const auto& y = b.agents_[i];
        if (x.present != y.present) return false;
        if (x.present && (x.color != y.color || x.cell != y.cell)) return false;
    }
    return true;
}

std::vector<AgentId> neighbors(const GridState& grid, Cell cell) {
    require_on_board(cell);
    std::vector<AgentId> out;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const Cell n{cell.row + dr, cell.col + dc};
            if (!n.on_board()) continue;
            if (auto id = grid.occupant(n)) out.push_back(*id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

NeighborCounts neighbor_counts_at(const GridState& grid, Cell cell, Color color, std::optional<Cell> ignore) {
    require_on_board(cell);
    NeighborCounts counts;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const Cell n{cell.row + dr, cell.col + dc};
            if (!n.on_board() || (ignore && n == *ignore)) continue;
            const auto id = grid.occupant(n);
            if (!id) continue;
            if (grid.color_of(*id) == color)
                ++counts.same;
            else
                ++counts.different;
        }
    }
    return counts;
}

NeighborCounts neighbor_counts(const GridState& grid, AgentId agent) {
    return neighbor_counts_at(grid, grid.cell_of(agent), grid.color_of(agent), std::nullopt);
}

std::optional<double> percent_same(NeighborCounts counts) noexcept {
    if (counts.total() == 0) return std::nullopt;
    return 100.0 * counts.same / counts.total();
}

std::optional<double> percent_same(const GridState& grid, AgentId agent) {
    return percent_same(neighbor_counts(grid, agent));
}

std::optional<Cell> move_target(const GridState& grid, Cell from, Direction dir) {
    require_on_board(from);
    for (Cell c = step_toward(from, dir); c.on_board(); c = step_toward(c, dir))
        if (grid.empty_at(c)) return c;
    return std::nullopt;
}

MoveResult apply_move(const GridState& grid, AgentId agent, Direction dir) {
    const Cell from = grid.cell_of(agent);
    MoveResult result{grid, false, from, from};
    if (auto to = move_target(grid, from, dir)) {
        result.grid.relocate(agent, *to);
        result.moved = true;
        result.to = *to;
    }
    return result;
}

GridState seat_raster(const std::vector<AgentId>& ids, const std::vector<Color>& colors) {
    if (ids.size() != colors.size()) throw DomainError("seat_raster: ids and colors differ in length");
    GridState grid;
    for (std::size_t i = 0; i < ids.size(); ++i) grid.place(ids[i], colors[i], Cell::from_index(ids[i] - 1));
    return grid;
}

}  // namespace seglab
