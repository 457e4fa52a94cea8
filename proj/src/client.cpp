#include "seglab/client.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "seglab/protocol.hpp"

namespace seglab {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// Everything on the stream runs on the single I/O thread.
class Client::Impl {
public:
    Impl(const std::string& host, unsigned short port, const std::string& target, Handler h)
        : ws(ioc), handler(std::move(h)), work(ioc.get_executor()) {
        tcp::resolver resolver(ioc);
        net::connect(ws.next_layer(), resolver.resolve(host, std::to_string(port)));
        ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
        ws.handshake(host + ":" + std::to_string(port), target);
        ws.text(true);
        isOpen = true;
        read();
        thread = std::thread([this] { ioc.run(); });
    }

    void read() {
        ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
            if (ec) {
                readDone = true;
                closeTimer.cancel();
                std::lock_guard lock(mu);
                isOpen = false;
                cv.notify_all();
                return;
            }
            std::string text = beast::buffers_to_string(buffer.data());
            buffer.clear();
            if (handler) {
                handler(text);
            } else {
                std::lock_guard lock(mu);
                frames.push_back(std::move(text));
                cv.notify_all();
            }
            read();
        });
    }

    void write_next() {
        ws.async_write(net::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
            if (ec) {
                outbox.clear();
                return;
            }
            outbox.pop_front();
            if (!outbox.empty())
                write_next();
            else if (closed)
                start_close();
        });
    }

    void start_close() {
        if (readDone) return;
        ws.async_close(websocket::close_code::normal, [](beast::error_code) {});
        // A server that never answers the close frame must not hang us.
        closeTimer.expires_after(std::chrono::seconds(2));
        closeTimer.async_wait([this](beast::error_code ec) {
            if (ec) return;
            beast::error_code ignored;
            ws.next_layer().close(ignored);
        });
    }

    void shutdown() {
        if (closed.exchange(true)) return;
        net::post(ioc, [this] {
            if (outbox.empty()) start_close();
        });
        work.reset();
        if (thread.joinable()) thread.join();
    }

    net::io_context ioc;
    websocket::stream<tcp::socket> ws;
    beast::flat_buffer buffer;
    Handler handler;
    net::executor_work_guard<net::io_context::executor_type> work;
    std::deque<std::string> outbox;
    net::steady_timer closeTimer{ioc};
    bool readDone = false;
    std::thread thread;
    std::atomic<bool> closed{false};

    mutable std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> frames;
    bool isOpen = false;
};

Client::Client(const std::string& host, unsigned short port, const std::string& target, Handler handler) {
    try {
        impl_ = std::make_unique<Impl>(host, port, target, std::move(handler));
    } catch (const std::exception& e) {
        throw std::runtime_error("cannot connect to ws://" + host + ":" + std::to_string(port) + target + ": " +
                                 e.what());
    }
}

Client::~Client() { close(); }

void Client::send(std::string text) {
    Impl* p = impl_.get();
    net::post(p->ioc, [p, text = std::move(text)]() mutable {
        p->outbox.push_back(std::move(text));
        if (p->outbox.size() == 1) p->write_next();
    });
}

std::optional<std::string> Client::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mu);
    impl_->cv.wait_for(lock, timeout, [&] { return !impl_->frames.empty() || !impl_->isOpen; });
    if (impl_->frames.empty()) return std::nullopt;
    std::string f = std::move(impl_->frames.front());
    impl_->frames.pop_front();
    return f;
}

std::optional<std::string> Client::wait_for(std::string_view type, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto f = next(left);
        if (!f) return std::nullopt;
        if (protocol::frame_type(*f) == type) return f;
    }
}

bool Client::open() const {
    std::lock_guard lock(impl_->mu);
    return impl_->isOpen;
}

void Client::close() {
    if (impl_) impl_->shutdown();
}

}  // namespace seglab
