#include <doctest.h>

#include "../support/harness.hpp"
#include "scpl/gateway.hpp"
#include "scpl/parser.hpp"
#include "scpl/trace.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <functional>
#include <thread>

using namespace scpl;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

/// Blocking test client. Every frame read is kept in `seen`.
class Client {
public:
    explicit Client(unsigned short port) : ws_(ioc_) {
        tcp::resolver r(ioc_);
        net::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/ws");
    }
    ~Client() {
        beast::error_code ec;
        ws_.close(websocket::close_code::normal, ec);
    }

    void send(const json& j) { ws_.write(net::buffer(j.dump())); }
    void send_raw(const std::string& s) { ws_.write(net::buffer(s)); }

    json read() {
        beast::flat_buffer b;
        ws_.read(b);
        json j = json::parse(beast::buffers_to_string(b.data()));
        seen.push_back(j);
        return j;
    }

    json read_until(const std::function<bool(const json&)>& pred) {
        for (int i = 0; i < 10000; ++i) {
            json j = read();
            if (pred(j)) return j;
        }
        throw std::runtime_error("frame never arrived");
    }

    json read_type(const std::string& type) {
        return read_until([&](const json& j) { return j["type"] == type; });
    }

    std::vector<json> seen;

private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

http::response<http::string_body> http_get(unsigned short port, const std::string& target) {
    net::io_context ioc;
    tcp::resolver r(ioc);
    beast::tcp_stream s(ioc);
    s.connect(r.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::string_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(s, req);
    beast::flat_buffer b;
    http::response<http::string_body> res;
    http::read(s, b, res);
    return res;
}

ServeOptions fast() {
    ServeOptions o;
    o.decision_timeout = std::chrono::milliseconds(10000);
    o.heartbeat = std::chrono::milliseconds(20);
    o.max_steps = 10000;
    return o;
}

struct Background {
    ServedRun& run;
    std::atomic<bool> stop{false};
    std::thread t;
    explicit Background(ServedRun& r) : run(r), t([this] { run.run(stop); }) {}
    ~Background() { join(); }
    void join() {
        stop = true;
        if (t.joinable()) t.join();
    }
};

}  // namespace

TEST_CASE("a client drives one tourist through a stay") {
    GatewayOptions gw;
    gw.token = "secret";
    gw.contract_name = "tourists_hosts";
    ServedRun sr(harness::corpus_contract("tourists_hosts"), RunOptions{}, gw, fast(), nullptr);
    sr.start();
    unsigned short port = sr.gateway().port();
    REQUIRE(port != 0);
    Background bg(sr);

    Client c(port);
    json hello = c.read_type("hello");
    CHECK(hello["contract_name"] == "tourists_hosts");
    CHECK(hello["agents"].size() == 5);

    c.send({{"type", "claim"}, {"agent", "gal"}, {"token", "wrong"}});
    CHECK(c.read_type("error")["code"] == "bad_token");
    c.send({{"type", "claim"}, {"agent", "nobody"}, {"token", "secret"}});
    CHECK(c.read_type("error")["code"] == "unknown_agent");
    c.send_raw("not json");
    CHECK(c.read_type("error")["code"] == "bad_frame");
    c.send({{"type", "decision"}, {"request_id", 9999}, {"alternative", 0}});
    CHECK(c.read_type("error")["code"] == "unknown_request");

    c.send({{"type", "claim"}, {"agent", "gal"}, {"token", "secret"}});
    json ack = c.read_type("hello");
    CHECK(ack["claimed"] == "gal");
    c.send({{"type", "claim"}, {"agent", "nimrod"}, {"token", "secret"}});
    CHECK(c.read_type("hello")["claimed"] == "nimrod");

    json req = c.read_type("oracle_request");
    CHECK(req["agent"] == "gal");
    CHECK(req["state"] == "tourist(roaming)");
    REQUIRE(req["alternatives"].size() == 1);
    CHECK(req["alternatives"][0]["act_pattern"] == "reserve(Host)");
    CHECK(req["alternatives"][0]["required_vars"] == json::array({"Host"}));

    {
        Client other(port);
        other.read_type("hello");
        other.send({{"type", "claim"}, {"agent", "gal"}, {"token", "secret"}});
        CHECK(other.read_type("error")["code"] == "already_claimed");
        other.send({{"type", "decision"}, {"request_id", req["request_id"]}, {"alternative", 0}});
        CHECK(other.read_type("error")["code"] == "not_claimed");
    }

    c.send({{"type", "decision"}, {"request_id", req["request_id"]}, {"alternative", 5}});
    CHECK(c.read_type("error")["code"] == "invalid_decision");
    c.send({{"type", "decision"},
            {"request_id", req["request_id"]},
            {"alternative", 0},
            {"bindings", {{"Host", "nimrod"}}}});

    json lodging = c.read_until([](const json& j) {
        return j["type"] == "state" && j["agent"] == "gal" && j["state_term"] == "tourist(lodging(nimrod))";
    });
    CHECK(lodging["type"] == "state");
    json checkout = c.read_type("oracle_request");
    CHECK(checkout["alternatives"][0]["act_pattern"] == "checkout(nimrod)");
    c.send({{"type", "decision"}, {"request_id", checkout["request_id"]}, {"alternative", 0}});
    c.read_until([](const json& j) {
        return j["type"] == "state" && j["agent"] == "nimrod" && j["state_term"] == "host(free)";
    });
    json again = c.read_type("oracle_request");
    c.send({{"type", "pass"}, {"request_id", again["request_id"]}});
    bg.join();

    const auto& trace = sr.engine().trace();
    std::vector<std::string> streamed, recorded;
    for (const auto& j : c.seen)
        if (j["type"] == "event" && j["kind"] == "act")
            streamed.push_back(j["agent"].get<std::string>() + "(" + j["payload"].get<std::string>() + ")");
    for (const auto& e : trace)
        if (e.kind == TraceEvent::Kind::Act) recorded.push_back(e.agent + "(" + render(e.payload) + ")");
    CHECK(streamed == recorded);
    CHECK(recorded == std::vector<std::string>{"gal(reserve(nimrod))", "nimrod(reservation_confirmed(gal))",
                                               "gal(checkout(nimrod))"});
    CHECK(verify_trace(harness::corpus_contract("tourists_hosts"), read_jsonl(jsonl_trace(trace))).ok());
}

TEST_CASE("late claims replay past events") {
    Contract k = harness::corpus_contract("tourists_hosts");
    ScriptedOracle o = ScriptedOracle::from_file(harness::source_path("corpus/scripts/tourists_hosts.json"));
    GatewayOptions gw;
    gw.interactive = {"ouri"};
    ServedRun sr(k, RunOptions{}, gw, fast(), &o);
    sr.start();
    Background bg(sr);
    // Wait for the scripted agents to finish.
    while (sr.gateway().wait_activity(std::chrono::milliseconds(200))) {
    }
    Client c(sr.gateway().port());
    c.read_type("hello");
    c.send({{"type", "claim"}, {"agent", "gal"}});
    CHECK(c.read_type("error")["code"] == "unknown_agent");  // not interactive
    c.send({{"type", "claim"}, {"agent", "ouri"}});
    c.read_type("hello");
    json first = c.read_type("event");
    CHECK(first["index"] == 1);
    c.read_until([](const json& j) { return j["type"] == "state" && j["agent"] == "ouri"; });
    bg.join();
}

TEST_CASE("scripted fallback reproduces the golden trace") {
    RunManifest m = load_manifest(harness::source_path("corpus/golden/tourists_hosts.manifest.json"));
    Contract k(load_program(m.contract));
    ScriptedOracle o = ScriptedOracle::from_file(m.oracle);
    ServeOptions so = fast();
    so.exit_when_idle = true;
    ServedRun sr(k, m.run_options(), GatewayOptions{}, so, &o);
    sr.start();
    std::atomic<bool> stop{false};
    CHECK(sr.run(stop) == Halt::Quiescent);
    CHECK(text_trace(sr.engine().trace()) == read_file(harness::source_path("corpus/golden/tourists_hosts.trace")));
    CHECK(verify_trace(k, sr.engine().trace()).ok());
}

TEST_CASE("http side") {
    Gateway g(GatewayOptions{});
    g.start();
    auto index = http_get(g.port(), "/");
    CHECK(index.result() == http::status::ok);
    CHECK(index.body().find("/ws") != std::string::npos);
    CHECK(http_get(g.port(), "/missing.js").result() == http::status::not_found);
    CHECK(http_get(g.port(), "/../etc/passwd").result() == http::status::bad_request);

    GatewayOptions same;
    same.port = g.port();
    Gateway clash(same);
    CHECK_THROWS_AS(clash.start(), PortInUse);
    g.stop();
}
