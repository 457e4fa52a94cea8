// server.hpp - WebSocket front end for game sessions.
//
// ws://host:port/<session>?role=player|board|admin
//   player  sends join, then move / satisfied
//   board   read-only (projector view)
//   admin   may also send admin frames
// The path selects the session ("/" is "default"); sessions are created on
// first use. Every session runs on its own strand, so all mutations of one
// session are serialized and sessions never block each other.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace seglab {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 0;  ///< 0 picks a free port
    std::filesystem::path dataDir = "data";
    std::uint64_t seed = 0;  ///< per-session seeds are derived from this and the session id
    std::chrono::milliseconds broadcastInterval{100};
    unsigned threads = 1;
};

class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving on background threads. Throws on bind failure.
    void start();
    /// Ends running games ("stopped"), flushes their logs, closes every connection. Idempotent.
    void stop();

    unsigned short port() const noexcept;
    const ServerOptions& options() const noexcept;
    /// Log files created so far, in creation order.
    std::vector<std::filesystem::path> logs() const;

    class Impl;

private:
    std::unique_ptr<Impl> impl_;
};

/// Seed a server with master seed `seed` gives the session named `id`.
std::uint64_t session_seed(std::uint64_t seed, const std::string& id) noexcept;

/// True for 1-64 characters of [A-Za-z0-9_-].
bool valid_session_id(const std::string& id) noexcept;

}  // namespace seglab
