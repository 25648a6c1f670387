#pragma once

#include "scpl/runtime.hpp"
#include "scpl/verifier.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

/// Abstract ledgers: every agent's full history. Act seq is the act's
/// position among its signer's acts.
using ScLedger = std::map<std::string, History>;

/// `v` appends `act` to its history.
struct ScTransition {
    ScLedger before;
    std::string agent;
    Act act;

    ScLedger after() const;
    bool output() const { return act.signer == agent; }
};

struct SocialContract {
    std::vector<std::string> agents;
    std::vector<ScTransition> transitions;

    ScLedger initial() const;
};

class NotAValidSC : public std::runtime_error {
public:
    explicit NotAValidSC(const std::string& w) : std::runtime_error(w) {}
};

/// Acts an agent may emit given its own history.
using OutputPolicy = std::function<std::vector<Term>(const std::string& agent, const History& own)>;

/// The closed contract generated by `outputs`: every reachable output the
/// policy allows plus every sound input. Throws when more than `cap`
/// transitions are generated.
SocialContract generate_sc(std::vector<std::string> agents, const OutputPolicy& outputs, std::size_t cap = 100000);

/// History as a list term `[u(a), ...]`, and back.
Term encode_history(const History& h);
History decode_history(const Term& list);

/// Canonical state label of a ledger.
std::string ledger_label(const ScLedger& l);

/// Throws NotAValidSC naming the first unsound transition, or the first
/// reachable ledger where output or input closure fails.
void validate_sc(const SocialContract& sc);

/// Grounded program: `hist(v, l_v), u(a) --> hist(v, l'_v)` for inputs and
/// `hist(v, l_v) --> a, hist(v, l'_v)` for outputs; activation `v#hist(v, [])`.
CheckedProgram atod_compile(const SocialContract& sc);

struct FiniteTS {
    std::set<std::string> states;
    std::string initial;
    std::set<std::pair<std::string, std::string>> transitions;
};

/// Ledgers reachable from the empty ledger, labelled by ledger_label.
FiniteTS sc_system(const SocialContract& sc);

struct Exploration {
    FiniteTS ts;
    std::map<std::string, std::string> mapping;  // state label -> projected label
};

/// Every configuration reachable through `successors`, labelled by states
/// and store. `project` gives each configuration's image.
Exploration explore(const Contract& contract, const std::function<std::string(const Configuration&)>& project,
                    std::size_t cap = 200000);

/// Ledger of a compiled program's configuration, store dropped.
std::string drop_store(const Configuration& c);

struct CounterExample {
    std::string condition;
    std::string from, to;
    std::string message;
};

/// Implementation check by graph search. In strict mode every impl step
/// must map onto a spec step, and every spec step between images must be
/// matched by an impl step between the preimages.
std::optional<CounterExample> check_implementation(const FiniteTS& impl, const FiniteTS& spec,
                                                   const std::map<std::string, std::string>& f, bool strict = false);

}  // namespace scpl
