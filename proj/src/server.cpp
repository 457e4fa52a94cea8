#include "seglab/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "seglab/event_log.hpp"
#include "seglab/protocol.hpp"
#include "seglab/rng.hpp"
#include "seglab/session.hpp"

namespace seglab {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
namespace fs = std::filesystem;

std::uint64_t session_seed(std::uint64_t seed, const std::string& id) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return derive_seed(seed, h);
}

bool valid_session_id(const std::string& id) noexcept {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    return true;
}

namespace {

enum class Role { Player, Board, Admin };

class Host;
class Connection;

}  // namespace

class Server::Impl {
public:
    explicit Impl(ServerOptions o) : opts(std::move(o)), acceptor(ioc), epoch(std::chrono::steady_clock::now()) {}

    std::int64_t now_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch).count();
    }
    std::chrono::steady_clock::time_point at_ms(std::int64_t ms) const { return epoch + std::chrono::milliseconds(ms); }

    std::shared_ptr<Host> host(const std::string& id);
    void accept();
    std::unique_ptr<GameLogWriter> open_log(const std::string& session, const GameStart& gs);
    /// Removes a log that was opened for a game that then failed to start.
    void discard_log(const fs::path& path);

    ServerOptions opts;
    net::io_context ioc;
    tcp::acceptor acceptor;
    std::chrono::steady_clock::time_point epoch;
    std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
    std::vector<std::thread> threads;
    unsigned short boundPort = 0;
    bool started = false;
    bool stopped = false;

    mutable std::mutex mu;  // hosts, logs
    std::map<std::string, std::shared_ptr<Host>> hosts;
    std::vector<fs::path> logs;
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket&& socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void run() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->read_request(); });
    }

    /// Thread-safe; frames go out in call order.
    void send(std::shared_ptr<const std::string> text) {
        net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)] {
            if (self->closing_) return;
            self->queue_.push_back(text);
            if (self->queue_.size() == 1) self->write_next();
        });
    }
    void send(std::string text) { send(std::make_shared<const std::string>(std::move(text))); }

    /// Closes after the queued frames are written.
    void close() {
        net::post(ws_.get_executor(), [self = shared_from_this()] {
            if (self->closing_) return;
            self->closing_ = true;
            if (self->queue_.empty()) self->do_close();
        });
    }

    Role role() const noexcept { return role_; }
    // Only touched on the session's strand.
    std::optional<AgentId> agent;

private:
    void read_request() {
        beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(30));
        http::async_read(beast::get_lowest_layer(ws_), buffer_, req_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    void on_request(beast::error_code ec) {
        if (ec) return;
        if (!websocket::is_upgrade(req_)) return reject(http::status::upgrade_required, "websocket only\n");
        const std::string target(req_.target());
        const auto q = target.find('?');
        std::string path = target.substr(0, q);
        while (!path.empty() && path.front() == '/') path.erase(path.begin());
        if (path.empty()) path = "default";
        if (!valid_session_id(path)) return reject(http::status::bad_request, "bad session id\n");
        role_ = Role::Player;
        if (q != std::string::npos) {
            const std::string query = target.substr(q + 1);
            std::size_t pos = 0;
            while (pos <= query.size()) {
                const auto amp = query.find('&', pos);
                const std::string kv = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
                if (kv.rfind("role=", 0) == 0) {
                    const std::string r = kv.substr(5);
                    if (r == "player")
                        role_ = Role::Player;
                    else if (r == "board")
                        role_ = Role::Board;
                    else if (r == "admin")
                        role_ = Role::Admin;
                    else
                        return reject(http::status::bad_request, "unknown role\n");
                }
                if (amp == std::string::npos) break;
                pos = amp + 1;
            }
        }
        sessionId_ = path;
        beast::get_lowest_layer(ws_).expires_never();
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void reject(http::status status, const char* body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, "text/plain");
        res->body() = body;
        res->keep_alive(false);
        res->prepare_payload();
        http::async_write(beast::get_lowest_layer(ws_), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    void on_accept(beast::error_code ec);
    void read_frame();
    void on_frame(beast::error_code ec);
    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->queue_.clear();
                self->closing_ = true;
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty())
                self->write_next();
            else if (self->closing_)
                self->do_close();
        });
    }
    void do_close() {
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }

    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl& server_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    bool closing_ = false;
    Role role_ = Role::Player;
    std::string sessionId_;
    std::shared_ptr<Host> host_;
};

using Strand = net::strand<net::io_context::executor_type>;

/// One session plus everyone connected to it. All members are used on strand_ only.
class Host : public std::enable_shared_from_this<Host> {
public:
    Host(Server::Impl& server, std::string id, Session session)
        : server_(server),
          id_(std::move(id)),
          strand_(net::make_strand(server.ioc)),
          session_(std::move(session)),
          broadcastTimer_(strand_),
          deadline_(strand_) {}

    const Strand& strand() const noexcept { return strand_; }

    void start_timer() {
        net::dispatch(strand_, [self = shared_from_this()] { self->schedule_broadcast(); });
    }

    void attach(const std::shared_ptr<Connection>& c) {
        if (shutDown_) {
            c->send(protocol::error_frame("server is shutting down"));
            c->close();
            return;
        }
        conns_.insert(c);
        if (session_.running()) c->send(protocol::game_start_frame(current_start()));
        c->send(state_text());
    }

    void detach(const std::shared_ptr<Connection>& c) { conns_.erase(c); }

    void on_frame(const std::shared_ptr<Connection>& c, const std::string& text) {
        try {
            std::visit([&](auto&& f) { handle(c, f); }, protocol::parse_client_frame(text));
        } catch (const SessionError& e) {
            c->send(protocol::error_frame(e.what()));
        } catch (const ProtocolError& e) {
            c->send(protocol::error_frame(e.what()));
        } catch (const DomainError& e) {
            c->send(protocol::error_frame(e.what()));
        }
    }

    /// Ends a running game, flushes its log, closes all connections.
    void shutdown() {
        shutDown_ = true;
        if (session_.running()) finish(session_.end_game(server_.now_ms(), "stopped"));
        broadcastTimer_.cancel();
        deadline_.cancel();
        for (const auto& c : conns_) c->close();
        conns_.clear();
    }

private:
    AgentId require_agent(const std::shared_ptr<Connection>& c) const {
        if (!c->agent) throw ProtocolError("join first");
        return *c->agent;
    }

    static void require_admin(const std::shared_ptr<Connection>& c) {
        if (c->role() != Role::Admin) throw ProtocolError("admin role required");
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::Join& f) {
        if (c->role() != Role::Player) throw ProtocolError("only player connections can join");
        if (c->agent) throw ProtocolError("already joined as " + std::to_string(*c->agent));
        if (auto existing = session_.player(f.id)) {
            // Reconnect: take over the id if its previous connection is gone.
            auto it = players_.find(f.id);
            auto prev = it == players_.end() ? nullptr : it->second.lock();
            if (prev && conns_.contains(prev))
                throw SessionError("login id " + std::to_string(f.id) + " already joined");
            c->agent = f.id;
            players_[f.id] = c;
            c->send(protocol::joined_frame(*existing));
            return;
        }
        const Player& p = session_.join(f.id, f.name);
        c->agent = p.id;
        players_[p.id] = c;
        c->send(protocol::joined_frame(p));
        dirty_ = true;
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::Move& f) {
        const AgentId a = require_agent(c);
        MoveOutcome o = session_.handle_move(a, f.dir, server_.now_ms());
        if (o.expired) finish(*o.expired);
        if (o.logged) {
            writer_->event(o.event);
            dirty_ = true;
        }
        if (f.ref) c->send(protocol::ack_frame(*f.ref, o.event));
        if (!o.logged) c->send(protocol::error_frame("no game is running"));
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::Satisfied& f) {
        const AgentId a = require_agent(c);
        if (auto rec = session_.set_satisfied(a, f.value, server_.now_ms()))
            finish(*rec);
        else
            dirty_ = true;
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::AdminCreate& f) {
        require_admin(c);
        if (session_.phase() != Phase::Lobby || !session_.roster().empty())
            throw SessionError("session can only be reconfigured in an empty lobby");
        SessionConfig cfg = f.config;
        cfg.sessionId = id_;
        session_ = Session::create(std::move(cfg));
        flush_state();
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::AdminStart& f) {
        require_admin(c);
        // Open the log first: a game without a log could not be replayed, so it must not start.
        GameStart planned;
        planned.trial = f.trial;
        planned.number = f.trial ? 0 : session_.games_played() + 1;
        auto writer = server_.open_log(id_, planned);
        const std::int64_t now = server_.now_ms();
        GameStart gs;
        try {
            gs = session_.start_game(f.trial, f.kind, now);
        } catch (...) {
            server_.discard_log(writer->path());
            throw;
        }
        startMs_ = now;
        writer_ = std::move(writer);
        writer_->header(session_.header());
        arm_deadline();
        broadcast(protocol::game_start_frame(gs));
        flush_state();
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::AdminStop&) {
        require_admin(c);
        finish(session_.end_game(server_.now_ms(), "stopped"));
    }

    void handle(const std::shared_ptr<Connection>& c, const protocol::AdminFinal&) {
        require_admin(c);
        session_.show_final_scores();
        broadcast(protocol::final_scores_frame(session_.final_scores()));
        flush_state();
    }

    GameStart current_start() const {
        GameStart gs;
        gs.number = session_.game_number();
        gs.kind = *session_.current_kind();
        gs.trial = session_.phase() == Phase::TrialRun;
        gs.table = session_.current_table();
        return gs;
    }

    void finish(const GameRecord& rec) {
        deadline_.cancel();
        if (writer_) {
            writer_->end(*rec.log.end);
            writer_.reset();
        }
        broadcast(protocol::game_end_frame(rec));
        flush_state();
    }

    void arm_deadline() {
        deadline_.expires_at(server_.at_ms(startMs_ + session_.config().gameLengthMs));
        deadline_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            if (auto rec = self->session_.tick(self->server_.now_ms()))
                self->finish(*rec);
            else if (self->session_.running())
                self->arm_deadline();
        });
    }

    void schedule_broadcast() {
        broadcastTimer_.expires_after(server_.opts.broadcastInterval);
        broadcastTimer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->shutDown_) return;
            if (auto rec = self->session_.tick(self->server_.now_ms())) self->finish(*rec);
            if (self->dirty_ || self->session_.running()) self->flush_state();
            self->schedule_broadcast();
        });
    }

    std::string state_text() const { return protocol::to_json(protocol::make_state(session_, server_.now_ms())); }

    void flush_state() {
        dirty_ = false;
        broadcast(state_text());
    }

    void broadcast(std::string text) {
        auto shared = std::make_shared<const std::string>(std::move(text));
        for (const auto& c : conns_) c->send(shared);
    }

    Server::Impl& server_;
    std::string id_;
    Strand strand_;
    Session session_;
    std::set<std::shared_ptr<Connection>> conns_;
    std::map<AgentId, std::weak_ptr<Connection>> players_;
    std::unique_ptr<GameLogWriter> writer_;
    net::steady_timer broadcastTimer_;
    net::steady_timer deadline_;
    std::int64_t startMs_ = 0;
    bool dirty_ = false;
    bool shutDown_ = false;
};

void Connection::on_accept(beast::error_code ec) {
    if (ec) return;
    host_ = server_.host(sessionId_);
    net::post(host_->strand(), [self = shared_from_this()] { self->host_->attach(self); });
    read_frame();
}

void Connection::read_frame() {
    buffer_.clear();
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_frame(ec); });
}

void Connection::on_frame(beast::error_code ec) {
    if (ec) {
        closing_ = true;
        net::post(host_->strand(), [self = shared_from_this()] { self->host_->detach(self); });
        return;
    }
    auto text = beast::buffers_to_string(buffer_.data());
    net::post(host_->strand(), [self = shared_from_this(), text = std::move(text)] { self->host_->on_frame(self, text); });
    read_frame();
}

}  // namespace

std::shared_ptr<Host> Server::Impl::host(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = hosts.find(id);
    if (it != hosts.end()) return it->second;
    SessionConfig cfg;
    cfg.sessionId = id;
    cfg.seed = session_seed(opts.seed, id);
    auto h = std::make_shared<Host>(*this, id, Session::create(cfg));
    hosts.emplace(id, h);
    h->start_timer();
    return h;
}

std::unique_ptr<GameLogWriter> Server::Impl::open_log(const std::string& session, const GameStart& gs) {
    fs::create_directories(opts.dataDir);
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const std::string base =
        session + "-" + (gs.trial ? std::string("trial") : "game" + std::to_string(gs.number)) + "-" + stamp;
    for (int n = 1; n < 10'000; ++n) {
        const fs::path p = opts.dataDir / (base + (n == 1 ? "" : "-" + std::to_string(n)) + ".jsonl");
        if (fs::exists(p)) continue;
        auto w = std::make_unique<GameLogWriter>(p);
        std::lock_guard lock(mu);
        logs.push_back(p);
        return w;
    }
    throw std::runtime_error("no free log file name for " + base);
}

void Server::Impl::discard_log(const fs::path& path) {
    std::error_code ignored;
    fs::remove(path, ignored);
    std::lock_guard lock(mu);
    std::erase(logs, path);
}

void Server::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Connection>(std::move(socket), *this)->run();
        accept();
    });
}

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
    Impl& s = *impl_;
    if (s.started) return;
    fs::create_directories(s.opts.dataDir);
    const tcp::endpoint ep(net::ip::make_address(s.opts.address), s.opts.port);
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen(net::socket_base::max_listen_connections);
    s.boundPort = s.acceptor.local_endpoint().port();
    s.work.emplace(s.ioc.get_executor());
    s.accept();
    s.host("default");
    for (unsigned i = 0; i < std::max(1u, s.opts.threads); ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
    s.started = true;
}

void Server::stop() {
    Impl& s = *impl_;
    if (!s.started || s.stopped) return;
    s.stopped = true;
    net::post(s.acceptor.get_executor(), [&s] {
        beast::error_code ignored;
        s.acceptor.close(ignored);
    });
    std::vector<std::shared_ptr<Host>> hosts;
    {
        std::lock_guard lock(s.mu);
        for (const auto& [_, h] : s.hosts) hosts.push_back(h);
    }
    for (const auto& h : hosts) {
        std::promise<void> done;
        net::post(h->strand(), [&] {
            h->shutdown();
            done.set_value();
        });
        done.get_future().wait();
    }
    // Give close handshakes a moment, then drop whatever is left.
    auto grace = std::make_shared<net::steady_timer>(s.ioc, std::chrono::milliseconds(500));
    grace->async_wait([&s, grace](beast::error_code) { s.ioc.stop(); });
    s.work.reset();
    for (auto& t : s.threads) t.join();
    s.threads.clear();
}

unsigned short Server::port() const noexcept { return impl_->boundPort; }

const ServerOptions& Server::options() const noexcept { return impl_->opts; }

std::vector<fs::path> Server::logs() const {
    std::lock_guard lock(impl_->mu);
    return impl_->logs;
}

}  // namespace seglab
