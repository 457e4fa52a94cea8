// client.hpp - minimal WebSocket client for bots, tests and tools.
#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace seglab {

class Client {
public:
    using Handler = std::function<void(const std::string&)>;

    /// Connects to ws://host:port<target> and completes the handshake. Throws
    /// std::runtime_error on failure. With a handler, every received frame is
    /// passed to it on the client's I/O thread; otherwise frames are queued for next().
    Client(const std::string& host, unsigned short port, const std::string& target, Handler handler = nullptr);
    ~Client();

    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    /// Thread-safe; frames are written in call order.
    void send(std::string text);

    /// Next queued frame, or nullopt after `timeout` or once the connection is closed and drained.
    std::optional<std::string> next(std::chrono::milliseconds timeout);
    /// Skips frames until one with "t" == `type` arrives.
    std::optional<std::string> wait_for(std::string_view type, std::chrono::milliseconds timeout);

    bool open() const;
    /// Sends a close frame and waits for the I/O thread to finish.
    void close();

    class Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace seglab
