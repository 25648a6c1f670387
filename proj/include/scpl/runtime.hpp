#pragma once

#include "scpl/contract.hpp"
#include "scpl/oracle.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace scpl {

struct AgentCell {
    std::string name;
    Term state;
    bool stopped = false;
    bool autonomous = false;
    History history;  // own acts at output time, others' at receipt
    std::uint64_t out_seq = 0;
    /// Acts each signer had emitted when this agent joined (spawned agents only).
    std::map<std::string, std::uint64_t> joined;
};

/// Store entry: the act plus its global emission order.
struct Envelope {
    Act act;
    std::uint64_t order = 0;
};

struct Configuration {
    std::map<std::string, AgentCell> agents;
    std::vector<std::string> order;  // activation order, then spawn order
    /// (sender, recipient) -> FIFO queue
    std::map<std::pair<std::string, std::string>, std::deque<Envelope>> store;
    std::uint64_t step = 0;     // transitions taken
    std::uint64_t emitted = 0;  // acts emitted
    std::uint64_t traced = 0;   // act and oracle events
    std::uint64_t autonomous_ids = 0;

    const AgentCell& cell(const std::string& agent) const;
    AgentCell& cell(const std::string& agent);
    bool has(const std::string& agent) const { return agents.count(agent) != 0; }
    std::vector<std::string> live() const;
};

struct SpawnInfo {
    std::string agent;
    Term state;
    bool autonomous = false;
};

struct TraceEvent {
    enum class Kind { Oracle, Act, Recv, Stop, Final };
    Kind kind = Kind::Act;
    std::uint64_t step = 0;
    std::uint64_t index = 0;  // Oracle and Act: 1-based position in the text trace
    std::string agent;
    Term payload;             // Oracle: chosen act; Act, Recv: the act
    std::uint64_t seq = 0;    // Act, Recv
    std::vector<std::string> recipients;  // Act
    std::optional<SpawnInfo> spawn;       // Act announcing a spawn
    std::string from;                     // Recv
    Term state;                           // Final
    bool stopped = false;                 // Final
    std::uint64_t history = 0;            // Final: length of the agent's history
};

const char* to_string(TraceEvent::Kind k);

/// One cell per activation pair, silent rules applied.
Configuration activate(const Contract& contract, std::size_t silent_cap = 1000);

/// Output alternatives of agent `v`; empty when stopped.
std::vector<Alternative> enabled_outputs(const Contract& contract, const Configuration& c, const std::string& v);

/// Delivers the head of the (sender, v) queue. Throws NotEnabled when empty.
void step_input(const Contract& contract, Configuration& c, const std::string& v, const std::string& sender,
                std::vector<TraceEvent>* events = nullptr, std::size_t silent_cap = 1000);

/// Emits a ground step of `v`. Throws NotEnabled or SpawnCollision.
void step_output(const Contract& contract, Configuration& c, const std::string& v, const GroundStep& g,
                 std::vector<TraceEvent>* events = nullptr, std::size_t silent_cap = 1000);

/// Every successor under every delivery and every ground output (choices
/// expanded). Alternatives with open variables are skipped.
std::vector<Configuration> successors(const Contract& contract, const Configuration& c);

enum class SchedulerKind { Canonical, Random };

struct RunOptions {
    SchedulerKind scheduler = SchedulerKind::Canonical;
    std::uint64_t seed = 0;
    /// Canonical tie-break order; unlisted agents follow by name.
    std::vector<std::string> priority;
    /// Random scheduler: a triple enabled this many steps is forced (0 = off).
    std::size_t fairness = 0;
    std::size_t silent_cap = 1000;
};

enum class Halt { MaxSteps, Quiescent };

/// Scheduler loop over one configuration.
class Engine {
public:
    Engine(Contract contract, RunOptions opts, Oracle* oracle);

    const Contract& contract() const { return contract_; }
    const Configuration& config() const { return c_; }
    const std::vector<TraceEvent>& trace() const { return trace_; }
    const RunOptions& options() const { return opts_; }

    void on_event(std::function<void(const TraceEvent&)> f) { listeners_.push_back(std::move(f)); }

    /// One transition. False at quiescence.
    bool step();
    Halt run(std::uint64_t max_steps);

    /// Ask agents that passed again.
    void clear_passed() { passed_.clear(); }
    void clear_passed(const std::string& agent) { passed_.erase(agent); }
    bool passed(const std::string& agent) const { return passed_.count(agent) != 0; }

    /// Appends one Final event per agent.
    void finish();

    /// Rank in the canonical order (lower goes first).
    std::size_t rank(const std::string& agent) const;

private:
    struct Pending {
        GroundStep step;
        Term state;
    };
    enum class TripleKind { Input, Output };
    struct Triple {
        std::string agent;
        TripleKind kind;
        std::string sender;
        std::string key() const;
    };

    bool step_canonical();
    bool step_random();
    OracleRequest make_request(const std::string& agent, std::vector<Alternative> alts);
    std::optional<GroundStep> forced(const std::string& agent, const std::vector<Alternative>& alts) const;
    std::vector<std::string> by_rank(std::vector<std::string> agents) const;
    void record_oracle(const std::string& agent, const GroundStep& g, std::uint64_t step);
    void do_input(const std::string& agent, const std::string& sender);
    void do_output(const std::string& agent, const GroundStep& g);
    void publish(std::size_t from);

    Contract contract_;
    RunOptions opts_;
    Oracle* oracle_;
    Configuration c_;
    std::vector<TraceEvent> trace_;
    std::vector<std::function<void(const TraceEvent&)>> listeners_;
    std::set<std::string> passed_;
    std::map<std::string, Pending> pending_;
    std::uint64_t next_request_ = 0;
    std::mt19937_64 rng_;
    std::map<std::string, std::size_t> ages_;
};

}  // namespace scpl
