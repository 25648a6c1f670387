#pragma once

#include "scpl/contract.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace scpl {

struct OracleRequest {
    std::uint64_t request_id = 0;
    std::string agent;
    Term state;
    std::vector<Alternative> alternatives;
    /// Validates a candidate decision against the runtime's rules.
    std::function<std::optional<GroundStep>(std::size_t, const Substitution&, std::string*)> try_bind;
};

struct OracleDecision {
    bool pass = true;
    std::size_t alternative = 0;
    Substitution bindings;

    static OracleDecision pass_turn() { return {}; }
    static OracleDecision choose(std::size_t alt, Substitution b) { return {false, alt, std::move(b)}; }
};

class Oracle {
public:
    virtual ~Oracle() = default;
    virtual OracleDecision decide(const OracleRequest& req) = 0;
    /// Order in which waiting agents are asked; `agents` arrive in scheduler priority.
    virtual std::vector<std::string> preference(std::vector<std::string> agents) const { return agents; }
};

/// Deterministic choice for autonomous agents: Pass with no ground choice,
/// the choice when there is exactly one, AutoOracleAmbiguous otherwise.
OracleDecision auto_decide(const OracleRequest& req);

/// Per-agent ordered payload lists, consumed front to back.
class ScriptedOracle : public Oracle {
public:
    ScriptedOracle() = default;
    /// `{agent: [payload, ...]}`; key order sets the agents' preference.
    static ScriptedOracle from_json(const std::string& text);
    static ScriptedOracle from_file(const std::string& path);

    void append(const std::string& agent, Term entry);
    std::size_t remaining(const std::string& agent) const;

    OracleDecision decide(const OracleRequest& req) override;
    std::vector<std::string> preference(std::vector<std::string> agents) const override;

private:
    std::vector<std::string> order_;
    std::map<std::string, std::deque<Term>> script_;
};

/// Seeded random volition, for property runs.
class RandomOracle : public Oracle {
public:
    struct Options {
        double pass_probability = 0.1;
        std::size_t max_agents = 8;  // spawn alternatives are skipped at this size
        int attempts = 12;
    };
    RandomOracle(const Contract& contract, std::uint64_t seed, Options opts);
    RandomOracle(const Contract& contract, std::uint64_t seed) : RandomOracle(contract, seed, Options{}) {}

    /// Agents currently in the run (names drawn for agent positions).
    void set_agents(std::function<std::vector<std::string>()> live) { live_ = std::move(live); }

    OracleDecision decide(const OracleRequest& req) override;

private:
    Term draw(const Alternative& alt, const std::string& var, const std::string& self);

    std::mt19937_64 rng_;
    Options opts_;
    std::set<std::pair<std::string, std::size_t>> agent_positions_;  // functor/arity, argument
    std::function<std::vector<std::string>()> live_;
    std::uint64_t fresh_ = 0;
};

/// Payload argument positions that input rules fill with Self or the
/// signer variable, e.g. `reserve/1` argument 0.
std::set<std::pair<std::string, std::size_t>> agent_positions(const Program& p);

/// Decisions from other threads, handed over through one queue.
class DecisionQueue {
public:
    struct Item {
        std::uint64_t request_id;
        OracleDecision decision;
    };
    void push(Item item);
    /// Waits for the next item; nullopt on timeout or close.
    std::optional<Item> pop(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Item> items_;
    bool closed_ = false;
};

/// Forwards requests of claimed agents to a publisher and waits for the
/// matching decision. Unclaimed agents, timeouts and closed queues Pass.
/// Invalid decisions are reported through `reject` and the request stays open.
class InteractiveOracle : public Oracle {
public:
    struct Hooks {
        std::function<bool(const std::string&)> claimed;
        std::function<void(const OracleRequest&)> publish;
        std::function<void(const OracleRequest&, const std::string&)> reject;
        std::function<void(const OracleRequest&)> retire;  // request answered or expired
    };
    InteractiveOracle(DecisionQueue& queue, Hooks hooks, std::chrono::milliseconds timeout, Oracle* fallback)
        : queue_(queue), hooks_(std::move(hooks)), timeout_(timeout), fallback_(fallback) {}

    OracleDecision decide(const OracleRequest& req) override;
    std::vector<std::string> preference(std::vector<std::string> agents) const override;

private:
    DecisionQueue& queue_;
    Hooks hooks_;
    std::chrono::milliseconds timeout_;
    Oracle* fallback_;  // unclaimed agents; may be null
};

}  // namespace scpl
