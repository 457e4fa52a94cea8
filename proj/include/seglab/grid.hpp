// grid.hpp - board geometry, neighborhoods and movement rules shared by the
// simulator and the live game service.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seglab {

/// Raised when an operation is asked about a cell or agent that is not on the board.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Color : std::uint8_t { Yellow, Blue };

constexpr Color other(Color c) noexcept { return c == Color::Yellow ? Color::Blue : Color::Yellow; }
std::string_view to_string(Color c) noexcept;
std::optional<Color> parse_color(std::string_view s) noexcept;

/// Display number of an avatar. Valid ids are 1..kMaxAgentId.
using AgentId = int;

enum class Direction : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down, Direction::Left,
                                                      Direction::Right};

std::string_view to_string(Direction d) noexcept;
std::optional<Direction> parse_direction(std::string_view s) noexcept;

/// (row, column), (0,0) is the top-left corner.
struct Cell {
    int row = 0;
    int col = 0;

    constexpr bool on_board() const noexcept;
    /// Row-major index, matching the seat-card raster.
    constexpr int index() const noexcept { return row * 6 + col; }
    static constexpr Cell from_index(int i) noexcept { return Cell{i / 6, i % 6}; }

    friend constexpr bool operator==(Cell, Cell) noexcept = default;
    friend constexpr auto operator<=>(Cell, Cell) noexcept = default;
};

inline constexpr int kSide = 6;
inline constexpr int kCells = kSide * kSide;
inline constexpr AgentId kMaxAgentId = kCells;

constexpr bool Cell::on_board() const noexcept { return row >= 0 && row < kSide && col >= 0 && col < kSide; }

constexpr Cell step_toward(Cell c, Direction d) noexcept {
    switch (d) {
        case Direction::Up: return {c.row - 1, c.col};
        case Direction::Down: return {c.row + 1, c.col};
        case Direction::Left: return {c.row, c.col - 1};
        case Direction::Right: return {c.row, c.col + 1};
    }
    return c;
}

/// Direction from `from` to a collinear, distinct `to`; nullopt if the two cells are not in line.
std::optional<Direction> direction_between(Cell from, Cell to) noexcept;

/// Authoritative 6x6 board with hard edges. At most one agent per cell, each
/// agent on exactly one cell.
class GridState {
public:
    GridState() { occupancy_.fill(0); }

    /// Adds an agent. Throws DomainError on a bad id, duplicate id, off-board or occupied cell.
    void place(AgentId id, Color color, Cell cell);

    /// Moves an agent to an empty cell. No movement rule is applied here.
    void relocate(AgentId id, Cell to);

    bool contains(AgentId id) const noexcept {
        return id >= 1 && id <= kMaxAgentId && agents_[static_cast<std::size_t>(id)].present;
    }
    std::optional<AgentId> occupant(Cell cell) const;
    bool empty_at(Cell cell) const { return !occupant(cell).has_value(); }

    Cell cell_of(AgentId id) const;
    Color color_of(AgentId id) const;

    /// Agent ids in ascending order.
    std::vector<AgentId> agents() const;
    int size() const noexcept { return count_; }
    int count(Color c) const noexcept;

    friend bool operator==(const GridState& a, const GridState& b) noexcept;

private:
    struct Slot {
        bool present = false;
        Color color = Color::Yellow;
        Cell cell{};
    };

    const Slot& slot(AgentId id) const;

    std::array<AgentId, kCells> occupancy_{};
    std::array<Slot, kMaxAgentId + 1> agents_{};
    int count_ = 0;
};

struct NeighborCounts {
    int same = 0;
    int different = 0;

    constexpr int total() const noexcept { return same + different; }
    friend bool operator==(NeighborCounts, NeighborCounts) noexcept = default;
    friend auto operator<=>(NeighborCounts, NeighborCounts) noexcept = default;
};

/// Occupants of the Moore-8 neighborhood of `cell`, clipped at the edges, ascending by id.
std::vector<AgentId> neighbors(const GridState& grid, Cell cell);

/// Same/different neighbor counts seen by `agent` at its current cell.
NeighborCounts neighbor_counts(const GridState& grid, AgentId agent);

/// Counts an agent of `color` would see standing at `cell`, ignoring whoever
/// occupies `ignore` (used to treat a mover's origin as vacated).
NeighborCounts neighbor_counts_at(const GridState& grid, Cell cell, Color color, std::optional<Cell> ignore);

/// 100 * same / total, or nullopt when the agent has no neighbors.
std::optional<double> percent_same(const GridState& grid, AgentId agent);
std::optional<double> percent_same(NeighborCounts counts) noexcept;

/// Nearest empty cell strictly in direction `dir`, jumping over occupied cells.
std::optional<Cell> move_target(const GridState& grid, Cell from, Direction dir);

struct MoveResult {
    GridState grid;
    bool moved = false;
    Cell from{};
    Cell to{};
};

MoveResult apply_move(const GridState& grid, AgentId agent, Direction dir);

/// Places ids in `ids` on cells id-1 (row-major), colors taken from `colors` in the same order.
GridState seat_raster(const std::vector<AgentId>& ids, const std::vector<Color>& colors);

}  // namespace seglab
