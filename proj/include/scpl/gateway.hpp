#pragma once

#include "scpl/oracle.hpp"
#include "scpl/runtime.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

class PortInUse : public std::runtime_error {
public:
    explicit PortInUse(const std::string& w) : std::runtime_error(w) {}
};

struct GatewayOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 0;  // 0: any free port
    std::string token;
    std::string static_dir;  // served under `/`; empty serves a stub page
    std::vector<std::string> interactive;  // claimable agents; empty: all
    std::string contract_name;
};

/// HTTP static files plus the WebSocket endpoint `/ws`, on its own I/O
/// thread. Sessions claim agents and answer their oracle requests; the run
/// itself stays on the caller's thread.
///
/// Frames out: hello, state, event, oracle_request, error.
/// Frames in: claim, decision, pass.
class Gateway {
public:
    explicit Gateway(GatewayOptions opts);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds and starts serving. Throws PortInUse.
    void start();
    void stop();
    unsigned short port() const;

    void add_agent(const std::string& agent);
    void publish_event(const TraceEvent& e);
    void publish_state(const std::string& agent, const Term& state);

    DecisionQueue& decisions();
    InteractiveOracle::Hooks oracle_hooks();

    bool claimed(const std::string& agent) const;
    std::vector<std::string> claimed_agents() const;

    /// Waits for a client frame or the timeout. True when a frame arrived.
    bool wait_activity(std::chrono::milliseconds timeout);

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

struct ServeOptions {
    std::uint64_t max_steps = 1000000;
    std::chrono::milliseconds decision_timeout{30000};
    /// Quiescent runs re-ask claimed agents after this long without frames.
    std::chrono::milliseconds heartbeat{2000};
    /// Return once quiescent with no agent claimed.
    bool exit_when_idle = false;
};

/// One run behind one gateway.
class ServedRun {
public:
    /// `fallback` decides for agents nobody claimed; may be null (Pass).
    ServedRun(Contract contract, RunOptions run, GatewayOptions gw, ServeOptions opts, Oracle* fallback);
    ~ServedRun();

    void start() { gateway_.start(); }
    /// Steps until `stop`, max steps or idle exit, then appends final states.
    Halt run(const std::atomic<bool>& stop);

    Gateway& gateway() { return gateway_; }
    const Engine& engine() const { return engine_; }

private:
    void publish_states();

    Gateway gateway_;
    ServeOptions opts_;
    InteractiveOracle oracle_;
    Engine engine_;
    std::map<std::string, Term> sent_;
};

}  // namespace scpl
