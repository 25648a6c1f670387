#include "scpl/gateway.hpp"

#include "scpl/parser.hpp"
#include "scpl/trace.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <algorithm>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace scpl {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using json = nlohmann::ordered_json;

namespace {

std::string error_frame(const std::string& code, const std::string& message) {
    return json{{"type", "error"}, {"code", code}, {"message", message}}.dump();
}

std::string mime_type(const std::string& path) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    return "application/octet-stream";
}

struct PendingRequest {
    std::string agent;
    std::size_t alternatives = 0;
    std::string frame;
};

class WsSession;

}  // namespace

struct Gateway::Impl {
    GatewayOptions opts;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;
    bool running = false;
    DecisionQueue queue;

    // I/O thread only.
    std::map<std::uint64_t, std::weak_ptr<WsSession>> sessions;
    std::uint64_t next_session = 0;
    std::vector<std::string> events;  // event frames so far, replayed on claim
    std::map<std::string, std::string> states;  // agent -> state frame
    std::map<std::uint64_t, PendingRequest> pending;

    // Shared with the run thread.
    mutable std::mutex mu;
    std::map<std::string, std::uint64_t> claims;  // agent -> session
    std::vector<std::string> agents;
    std::condition_variable activity_cv;
    bool activity = false;

    void accept();
    void serve_http(tcp::socket socket);
    void opened(const std::shared_ptr<WsSession>& s);
    void closed(std::uint64_t id);
    void on_frame(WsSession& s, const std::string& text);
    void send_to(std::uint64_t id, const std::string& frame);
    void send_to_agent(const std::string& agent, const std::string& frame);
    void broadcast(const std::string& frame);
    std::string hello(const std::string& claimed) const;
    void poke() {
        {
            std::lock_guard lock(mu);
            activity = true;
        }
        activity_cv.notify_all();
    }
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, Gateway::Impl& gw, std::uint64_t id) : ws_(std::move(socket)), gw_(gw), id_(id) {}

    std::uint64_t id() const { return id_; }

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        auto self = shared_from_this();
        ws_.async_accept(req, [self](beast::error_code ec) {
            if (ec) return;
            self->gw_.opened(self);
            self->read();
        });
    }

    void send(std::string frame) {
        out_.push_back(std::move(frame));
        if (out_.size() == 1) write();
    }

    void close() {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).close();
    }

private:
    void read() {
        auto self = shared_from_this();
        ws_.async_read(buf_, [self](beast::error_code ec, std::size_t) {
            if (ec) {
                self->gw_.closed(self->id_);
                return;
            }
            std::string text = beast::buffers_to_string(self->buf_.data());
            self->buf_.consume(self->buf_.size());
            self->gw_.on_frame(*self, text);
            self->read();
        });
    }

    void write() {
        auto self = shared_from_this();
        ws_.text(true);
        ws_.async_write(net::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buf_;
    std::deque<std::string> out_;
    Gateway::Impl& gw_;
    std::uint64_t id_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, Gateway::Impl& gw) : stream_(std::move(socket)), gw_(gw) {}

    void run() {
        stream_.expires_after(std::chrono::seconds(30));
        auto self = shared_from_this();
        http::async_read(stream_, buf_, req_, [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->handle();
        });
    }

private:
    void handle() {
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            if (req_.target() != "/ws") return reply(http::status::not_found, "text/plain", "no such endpoint\n");
            auto s = std::make_shared<WsSession>(stream_.release_socket(), gw_, ++gw_.next_session);
            s->run(std::move(req_));
            return;
        }
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return reply(http::status::method_not_allowed, "text/plain", "GET only\n");
        std::string target(req_.target());
        target = target.substr(0, target.find('?'));
        if (target.empty() || target.back() == '/') target += "index.html";
        if (target.find("..") != std::string::npos)
            return reply(http::status::bad_request, "text/plain", "bad path\n");
        if (gw_.opts.static_dir.empty()) {
            if (target == "/index.html")
                return reply(http::status::ok, "text/html",
                             "<!doctype html><title>scpl</title><p>scpl gateway: connect a console to /ws</p>\n");
            return reply(http::status::not_found, "text/plain", "not found\n");
        }
        std::string path = gw_.opts.static_dir + target;
        std::ifstream in(path, std::ios::binary);
        if (!in) return reply(http::status::not_found, "text/plain", "not found\n");
        std::ostringstream body;
        body << in.rdbuf();
        reply(http::status::ok, mime_type(path), body.str());
    }

    void reply(http::status status, const std::string& type, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "scpl");
        res->set(http::field::content_type, type);
        res->keep_alive(false);
        if (req_.method() != http::verb::head) res->body() = std::move(body);
        res->prepare_payload();
        auto self = shared_from_this();
        http::async_write(stream_, *res, [self, res](beast::error_code, std::size_t) {
            beast::error_code ec;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
    Gateway::Impl& gw_;
};

}  // namespace

void Gateway::Impl::accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<HttpSession>(std::move(socket), *this)->run();
        accept();
    });
}

std::string Gateway::Impl::hello(const std::string& claimed) const {
    json j{{"type", "hello"}};
    {
        std::lock_guard lock(mu);
        j["agents"] = agents;
    }
    j["contract_name"] = opts.contract_name;
    if (!claimed.empty()) j["claimed"] = claimed;
    return j.dump();
}

void Gateway::Impl::opened(const std::shared_ptr<WsSession>& s) {
    sessions[s->id()] = s;
    s->send(hello(""));
}

void Gateway::Impl::closed(std::uint64_t id) {
    sessions.erase(id);
    {
        std::lock_guard lock(mu);
        for (auto it = claims.begin(); it != claims.end();)
            it = it->second == id ? claims.erase(it) : std::next(it);
    }
    poke();
}

void Gateway::Impl::send_to(std::uint64_t id, const std::string& frame) {
    auto it = sessions.find(id);
    if (it == sessions.end()) return;
    if (auto s = it->second.lock()) s->send(frame);
}

void Gateway::Impl::send_to_agent(const std::string& agent, const std::string& frame) {
    std::uint64_t id = 0;
    {
        std::lock_guard lock(mu);
        auto it = claims.find(agent);
        if (it == claims.end()) return;
        id = it->second;
    }
    send_to(id, frame);
}

void Gateway::Impl::broadcast(const std::string& frame) {
    for (auto it = sessions.begin(); it != sessions.end();) {
        if (auto s = it->second.lock()) {
            s->send(frame);
            ++it;
        } else {
            it = sessions.erase(it);
        }
    }
}

void Gateway::Impl::on_frame(WsSession& s, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        return s.send(error_frame("bad_frame", std::string("not JSON: ") + e.what()));
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        return s.send(error_frame("bad_frame", "frame needs a string `type`"));
    std::string type = j["type"].get<std::string>();
    try {
        if (type == "claim") {
            std::string agent = j.at("agent").get<std::string>();
            std::string token = j.value("token", std::string{});
            if (token != opts.token) return s.send(error_frame("bad_token", "token rejected"));
            {
                std::lock_guard lock(mu);
                bool known = std::find(agents.begin(), agents.end(), agent) != agents.end();
                bool served = opts.interactive.empty() ||
                              std::find(opts.interactive.begin(), opts.interactive.end(), agent) !=
                                  opts.interactive.end();
                if (!known || !served) {
                    s.send(error_frame("unknown_agent", agent + " is not a served agent of this run"));
                    return;
                }
                auto it = claims.find(agent);
                if (it != claims.end()) {
                    s.send(error_frame("already_claimed", agent + " is claimed by another session"));
                    return;
                }
                claims[agent] = s.id();
            }
            s.send(hello(agent));
            for (const auto& e : events) s.send(e);
            if (auto st = states.find(agent); st != states.end()) s.send(st->second);
            for (const auto& [id, p] : pending)
                if (p.agent == agent) s.send(p.frame);
            poke();
            return;
        }
        if (type == "decision" || type == "pass") {
            std::uint64_t id = j.at("request_id").get<std::uint64_t>();
            auto p = pending.find(id);
            if (p == pending.end()) return s.send(error_frame("unknown_request", "no open request " + std::to_string(id)));
            {
                std::lock_guard lock(mu);
                auto c = claims.find(p->second.agent);
                if (c == claims.end() || c->second != s.id()) {
                    s.send(error_frame("not_claimed", p->second.agent + " is not claimed by this session"));
                    return;
                }
            }
            OracleDecision d = OracleDecision::pass_turn();
            if (type == "decision") {
                std::size_t alt = j.at("alternative").get<std::size_t>();
                if (alt >= p->second.alternatives)
                    return s.send(error_frame("invalid_decision", "no alternative " + std::to_string(alt)));
                Substitution b;
                if (j.contains("bindings")) {
                    if (!j["bindings"].is_object()) return s.send(error_frame("bad_frame", "bindings must be an object"));
                    for (auto it = j["bindings"].begin(); it != j["bindings"].end(); ++it) {
                        Term t = parse_term(it.value().get<std::string>());
                        if (!t.ground())
                            return s.send(error_frame("invalid_decision", it.key() + " is bound to a non-ground term"));
                        b[it.key()] = t;
                    }
                }
                d = OracleDecision::choose(alt, std::move(b));
            }
            queue.push({id, std::move(d)});
            poke();
            return;
        }
        s.send(error_frame("bad_frame", "unknown frame type " + type));
    } catch (const SyntaxError& e) {
        s.send(error_frame("bad_frame", "binding does not parse: " + e.message()));
    } catch (const std::exception& e) {
        s.send(error_frame("bad_frame", e.what()));
    }
}

Gateway::Gateway(GatewayOptions opts) : impl_(std::make_unique<Impl>()) { impl_->opts = std::move(opts); }

Gateway::~Gateway() { stop(); }

void Gateway::start() {
    auto& im = *impl_;
    tcp::endpoint ep(net::ip::make_address(im.opts.address), im.opts.port);
    beast::error_code ec;
    im.acceptor.open(ep.protocol(), ec);
    if (!ec) im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) im.acceptor.bind(ep, ec);
    if (ec == net::error::address_in_use) throw PortInUse("port " + std::to_string(im.opts.port) + " is in use");
    if (!ec) im.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw std::runtime_error("cannot listen on " + im.opts.address + ":" + std::to_string(im.opts.port) +
                                     ": " + ec.message());
    im.accept();
    im.running = true;
    im.io_thread = std::thread([&im] { im.ioc.run(); });
}

void Gateway::stop() {
    auto& im = *impl_;
    im.queue.close();
    if (!im.running) return;
    im.running = false;
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        im.acceptor.close(ec);
        for (auto& [id, w] : im.sessions)
            if (auto s = w.lock()) s->close();
        im.sessions.clear();
    });
    // Let the close handlers drain before stopping the loop.
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    im.ioc.stop();
    if (im.io_thread.joinable()) im.io_thread.join();
}

unsigned short Gateway::port() const {
    beast::error_code ec;
    auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

void Gateway::add_agent(const std::string& agent) {
    std::lock_guard lock(impl_->mu);
    if (std::find(impl_->agents.begin(), impl_->agents.end(), agent) == impl_->agents.end())
        impl_->agents.push_back(agent);
}

void Gateway::publish_event(const TraceEvent& e) {
    json j{{"type", "event"}};
    switch (e.kind) {
        case TraceEvent::Kind::Oracle:
        case TraceEvent::Kind::Act:
            j["index"] = e.index;
            j["agent"] = e.agent;
            j["kind"] = to_string(e.kind);
            j["payload"] = render(e.payload);
            j["recipients"] = e.recipients;
            if (e.kind == TraceEvent::Kind::Act) j["seq"] = e.seq;
            break;
        case TraceEvent::Kind::Recv:
            j["agent"] = e.agent;
            j["kind"] = "recv";
            j["from"] = e.from;
            j["seq"] = e.seq;
            j["payload"] = render(e.payload);
            break;
        case TraceEvent::Kind::Stop:
            j["agent"] = e.agent;
            j["kind"] = "stop";
            break;
        case TraceEvent::Kind::Final: return;
    }
    j["step"] = e.step;
    auto& im = *impl_;
    net::post(im.ioc, [&im, frame = j.dump()] {
        im.events.push_back(frame);
        im.broadcast(frame);
    });
}

void Gateway::publish_state(const std::string& agent, const Term& state) {
    std::string frame = json{{"type", "state"}, {"agent", agent}, {"state_term", render(state)}}.dump();
    auto& im = *impl_;
    net::post(im.ioc, [&im, agent, frame] {
        im.states[agent] = frame;
        im.broadcast(frame);
    });
}

DecisionQueue& Gateway::decisions() { return impl_->queue; }

InteractiveOracle::Hooks Gateway::oracle_hooks() {
    Impl* im = impl_.get();
    InteractiveOracle::Hooks h;
    h.claimed = [im](const std::string& agent) {
        std::lock_guard lock(im->mu);
        return im->claims.count(agent) != 0;
    };
    h.publish = [im](const OracleRequest& req) {
        json alts = json::array();
        for (std::size_t i = 0; i < req.alternatives.size(); ++i) {
            const Alternative& a = req.alternatives[i];
            json opts = json::array();
            for (const auto& o : a.choice_options) opts.push_back(render(o));
            json alt{{"index", i}, {"act_pattern", render(substitute(a.act_pattern, a.theta))},
                     {"required_vars", a.required_vars}};
            if (!a.choice_var.empty()) alt["choice_var"] = a.choice_var;
            alt["choice_options"] = opts;
            alts.push_back(alt);
        }
        json j{{"type", "oracle_request"}, {"request_id", req.request_id}, {"agent", req.agent},
               {"state", render(req.state)}, {"alternatives", alts}};
        PendingRequest p{req.agent, req.alternatives.size(), j.dump()};
        net::post(im->ioc, [im, id = req.request_id, p] {
            im->pending[id] = p;
            im->send_to_agent(p.agent, p.frame);
        });
    };
    h.reject = [im](const OracleRequest& req, const std::string& why) {
        net::post(im->ioc, [im, agent = req.agent, why] {
            im->send_to_agent(agent, error_frame("invalid_decision", why));
        });
    };
    h.retire = [im](const OracleRequest& req) {
        net::post(im->ioc, [im, id = req.request_id] { im->pending.erase(id); });
    };
    return h;
}

bool Gateway::claimed(const std::string& agent) const {
    std::lock_guard lock(impl_->mu);
    return impl_->claims.count(agent) != 0;
}

std::vector<std::string> Gateway::claimed_agents() const {
    std::lock_guard lock(impl_->mu);
    std::vector<std::string> out;
    for (const auto& [a, _] : impl_->claims) out.push_back(a);
    return out;
}

bool Gateway::wait_activity(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mu);
    bool hit = impl_->activity_cv.wait_for(lock, timeout, [&] { return impl_->activity; });
    impl_->activity = false;
    return hit;
}

// ---------------------------------------------------------------- served run

ServedRun::ServedRun(Contract contract, RunOptions run, GatewayOptions gw, ServeOptions opts, Oracle* fallback)
    : gateway_(std::move(gw)),
      opts_(opts),
      oracle_(gateway_.decisions(), gateway_.oracle_hooks(), opts.decision_timeout, fallback),
      engine_(std::move(contract), std::move(run), &oracle_) {
    for (const auto& a : engine_.config().order) gateway_.add_agent(a);
    engine_.on_event([this](const TraceEvent& e) {
        if (e.kind == TraceEvent::Kind::Act && e.spawn) gateway_.add_agent(e.spawn->agent);
        gateway_.publish_event(e);
    });
}

ServedRun::~ServedRun() { gateway_.stop(); }

void ServedRun::publish_states() {
    for (const auto& a : engine_.config().order) {
        const Term& s = engine_.config().agents.at(a).state;
        auto it = sent_.find(a);
        if (it != sent_.end() && it->second == s) continue;
        sent_[a] = s;
        gateway_.publish_state(a, s);
    }
}

Halt ServedRun::run(const std::atomic<bool>& stop) {
    publish_states();
    Halt halt = Halt::Quiescent;
    for (;;) {
        if (stop) break;
        if (engine_.config().step >= opts_.max_steps) {
            halt = Halt::MaxSteps;
            break;
        }
        bool moved = engine_.step();
        publish_states();
        if (moved) continue;
        if (opts_.exit_when_idle && gateway_.claimed_agents().empty()) break;
        gateway_.wait_activity(opts_.heartbeat);
        for (const auto& a : gateway_.claimed_agents()) engine_.clear_passed(a);
    }
    engine_.finish();
    return halt;
}

}  // namespace scpl
