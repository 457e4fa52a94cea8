// utility_table.hpp - percent-same bins to points.
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "seglab/grid.hpp"

namespace seglab {

/// The four scoring rules played in a session.
enum class GameKind { Same, Diverse, SameAndDiverse, SameOrDifferent };

inline constexpr std::array<GameKind, 4> kGameKinds{GameKind::Same, GameKind::Diverse, GameKind::SameAndDiverse,
                                                    GameKind::SameOrDifferent};

/// "same", "diverse", "same-and-diverse", "same-or-different".
std::string_view to_string(GameKind k) noexcept;
std::optional<GameKind> parse_game_kind(std::string_view s) noexcept;

inline constexpr int kBins = 11;
inline constexpr int kMinPoints = 5;
inline constexpr int kMaxPoints = 100;

/// Bin k covers percent-same in [10k, 10k+10); exactly 100% has its own bin 10.
constexpr int bin_of(double percent) noexcept {
    int k = static_cast<int>(percent / 10.0);
    return k < 0 ? 0 : (k > 10 ? 10 : k);
}

/// Same as bin_of(100*same/total) but in integer arithmetic.
constexpr int bin_of(NeighborCounts c) noexcept { return c.total() == 0 ? 0 : (10 * c.same) / c.total(); }

class UtilityTable {
public:
    using Bins = std::array<int, kBins>;

    /// Validates the general invariants: every bin in [5, 100], at least one bin at 100.
    /// If `name` is a preset name, the preset's shape is enforced too.
    UtilityTable(std::string name, Bins bins);

    static UtilityTable preset(GameKind kind);

    const std::string& name() const noexcept { return name_; }
    const Bins& bins() const noexcept { return bins_; }
    int at(int bin) const { return bins_.at(static_cast<std::size_t>(bin)); }
    int max() const noexcept { return max_; }
    int min() const noexcept { return min_; }

    friend bool operator==(const UtilityTable&, const UtilityTable&) = default;

private:
    std::string name_;
    Bins bins_;
    int max_;
    int min_;
};

/// Bin lookup; an agent with no neighbors scores the table minimum.
int score(const UtilityTable& table, std::optional<double> percent_same) noexcept;
int score(const UtilityTable& table, NeighborCounts counts) noexcept;

/// Checks the shape a preset of `kind` must have. Returns a reason on failure.
std::optional<std::string> shape_violation(GameKind kind, const UtilityTable::Bins& bins);

/// {"name": "...", "bins": [11 ints]}
UtilityTable parse_utility_table(std::string_view json_text);
UtilityTable load_utility_table(const std::filesystem::path& path);
std::string to_json(const UtilityTable& table);

}  // namespace seglab
