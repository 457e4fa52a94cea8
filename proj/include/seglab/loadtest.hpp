// loadtest.hpp - scripted bot players driving a game over the real wire protocol.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "seglab/utility_table.hpp"

namespace seglab {

enum class BotPolicy {
    Random,  ///< uniformly random direction
    Greedy,  ///< the direction with the best resulting score, only if it beats staying
};

std::string_view to_string(BotPolicy p) noexcept;
std::optional<BotPolicy> parse_bot_policy(std::string_view s) noexcept;

struct LoadtestOptions {
    /// Target server; port 0 runs a private in-process server writing to dataDir.
    std::string host = "127.0.0.1";
    unsigned short port = 0;
    std::filesystem::path dataDir = "loadtest-data";
    std::string session = "loadtest";
    int players = 20;
    BotPolicy policy = BotPolicy::Random;
    /// Aggregate rate over all bots (Poisson arrivals).
    double movesPerSec = 4.0;
    std::int64_t durationMs = 120'000;
    GameKind kind = GameKind::Same;
    std::uint64_t seed = 0;

    /// Throws DomainError with the first violated constraint.
    void validate() const;
};

struct LatencyStats {
    std::size_t samples = 0;
    double p50 = 0, p95 = 0, p99 = 0, max = 0;  ///< milliseconds
};

struct LoadtestReport {
    std::int64_t movesSent = 0;
    std::int64_t movesAccepted = 0;   ///< acked and applied
    std::int64_t movesRejected = 0;   ///< acked, blocked or outside the game
    std::int64_t movesIdle = 0;       ///< greedy bot had nothing better than staying
    double acceptanceRate = 0.0;      ///< accepted / acked
    /// Duplicate cells, agents missing from the board, clocks past the game length,
    /// failed replay, or a replayed end state that differs from what was broadcast.
    std::int64_t invariantViolations = 0;
    std::vector<std::string> violationNotes;
    /// Time from sending a move to the first state broadcast that includes it.
    LatencyStats broadcastLatency;
    std::int64_t endTMs = 0;  ///< server game clock at the end line
    std::string endReason;
    /// Wall time between gameStart and gameEnd as seen by the admin client.
    std::int64_t observedGameMs = 0;
    std::optional<double> finalSegregation;
    std::optional<std::filesystem::path> log;
    /// Set when the log was replayed (in-process server only).
    std::optional<bool> replayOk;

    std::string to_json() const;
};

/// Runs one game with `players` bots and returns once it has ended.
/// Throws std::runtime_error if the server cannot be reached or refuses the setup.
LoadtestReport run_loadtest(const LoadtestOptions& options);

}  // namespace seglab
