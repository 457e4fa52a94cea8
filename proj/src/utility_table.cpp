#include "seglab/utility_table.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace seglab {

std::string_view to_string(GameKind k) noexcept {
    switch (k) {
        case GameKind::Same: return "same";
        case GameKind::Diverse: return "diverse";
        case GameKind::SameAndDiverse: return "same-and-diverse";
        case GameKind::SameOrDifferent: return "same-or-different";
    }
    return "?";
}

std::optional<GameKind> parse_game_kind(std::string_view s) noexcept {
    for (GameKind k : kGameKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

namespace {

bool non_decreasing(const UtilityTable::Bins& b, int lo, int hi) {
    for (int i = lo; i < hi; ++i)
        if (b[i] > b[i + 1]) return false;
    return true;
}

bool non_increasing(const UtilityTable::Bins& b, int lo, int hi) {
    for (int i = lo; i < hi; ++i)
        if (b[i] < b[i + 1]) return false;
    return true;
}

}  // namespace

std::optional<std::string> shape_violation(GameKind kind, const UtilityTable::Bins& b) {
    const int hi = *std::max_element(b.begin(), b.end());
    const int lo = *std::min_element(b.begin(), b.end());
    switch (kind) {
        case GameKind::Same:
            if (!non_decreasing(b, 0, 10)) return "same table must be non-decreasing";
            break;
        case GameKind::Diverse:
            if (!non_increasing(b, 0, 10)) return "diverse table must be non-increasing";
            break;
        case GameKind::SameAndDiverse:
            if (!non_decreasing(b, 0, 5) || !non_increasing(b, 5, 10))
                return "same-and-diverse table must rise to bin 5 and fall after it";
            if (std::count(b.begin(), b.end(), hi) != 1 || b[5] != hi)
                return "same-and-diverse table must have a single peak at bin 5";
            break;
        case GameKind::SameOrDifferent:
            if (!non_increasing(b, 0, 5) || !non_decreasing(b, 5, 10))
                return "same-or-different table must fall to bin 5 and rise after it";
            if (b[0] != hi || b[10] != hi) return "same-or-different table must peak at bins 0 and 10";
            if (b[5] != lo) return "same-or-different table must have its minimum at bin 5";
            break;
    }
    return std::nullopt;
}

UtilityTable::UtilityTable(std::string name, Bins bins) : name_(std::move(name)), bins_(bins) {
    for (int v : bins_)
        if (v < kMinPoints || v > kMaxPoints)
            throw DomainError("utility table '" + name_ + "': bin value " + std::to_string(v) +
                              " outside [5, 100]");
    max_ = *std::max_element(bins_.begin(), bins_.end());
    min_ = *std::min_element(bins_.begin(), bins_.end());
    if (max_ != kMaxPoints) throw DomainError("utility table '" + name_ + "': no bin reaches 100");
    if (auto kind = parse_game_kind(name_))
        if (auto why = shape_violation(*kind, bins_)) throw DomainError("utility table '" + name_ + "': " + *why);
}

UtilityTable UtilityTable::preset(GameKind kind) {
    static constexpr Bins kSame{5, 14, 24, 33, 43, 52, 62, 71, 81, 90, 100};
    switch (kind) {
        case GameKind::Same: return {"same", kSame};
        case GameKind::Diverse: {
            Bins b = kSame;
            std::reverse(b.begin(), b.end());
            return {"diverse", b};
        }
        case GameKind::SameAndDiverse: return {"same-and-diverse", {5, 24, 43, 62, 81, 100, 81, 62, 43, 24, 5}};
        case GameKind::SameOrDifferent: return {"same-or-different", {100, 81, 62, 43, 24, 5, 24, 43, 62, 81, 100}};
    }
    throw DomainError("unknown game kind");
}

int score(const UtilityTable& table, std::optional<double> percent_same) noexcept {
    if (!percent_same) return table.min();
    return table.bins()[static_cast<std::size_t>(bin_of(*percent_same))];
}

int score(const UtilityTable& table, NeighborCounts counts) noexcept {
    if (counts.total() == 0) return table.min();
    return table.bins()[static_cast<std::size_t>(bin_of(counts))];
}

UtilityTable parse_utility_table(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError(std::string("utility table config: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string() || !doc.contains("bins") ||
        !doc["bins"].is_array())
        throw DomainError("utility table config must be {\"name\": string, \"bins\": [11 integers]}");
    const auto& arr = doc["bins"];
    if (arr.size() != kBins) throw DomainError("utility table config: expected 11 bins, got " + std::to_string(arr.size()));
    UtilityTable::Bins bins{};
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (!arr[i].is_number_integer()) throw DomainError("utility table config: bins must be integers");
        bins[i] = arr[i].get<int>();
    }
    return UtilityTable(doc["name"].get<std::string>(), bins);
}

UtilityTable load_utility_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read utility table config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_utility_table(ss.str());
}

std::string to_json(const UtilityTable& table) {
    return nlohmann::json{{"name", table.name()}, {"bins", table.bins()}}.dump();
}

}  // namespace seglab
