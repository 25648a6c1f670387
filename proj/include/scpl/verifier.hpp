#pragma once

#include "scpl/runtime.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

/// Acts of `h` signed by `u`, in order.
History restrict(const History& h, const std::string& u);

/// Histories indexed by agent. `joined[v][u]` counts the u-acts emitted
/// before v joined; agents present from activation have no entries.
struct Ledger {
    std::vector<std::string> agents;
    std::map<std::string, History> views;
    std::map<std::string, std::map<std::string, std::uint64_t>> joined;

    std::uint64_t offset(const std::string& viewer, const std::string& signer) const;
};

Ledger ledger_of(const Configuration& c);

/// l*[v] = restrict(l[v], v)
std::map<std::string, History> diagonal(const Ledger& l);

struct SoundnessViolation {
    std::string viewer, signer;
    std::size_t position = 0;  // index into restrict(l[viewer], signer)
    std::string message;
};

/// Every viewer's view of every signer is a segment of the signer's
/// diagonal starting at the join offset (a prefix when the offset is 0).
std::optional<SoundnessViolation> check_sound(const Ledger& l);
std::optional<SoundnessViolation> check_sound(const Configuration& c);

/// Per signer, one restricted history is a prefix of the other, after
/// aligning the first acts by seq.
bool check_consistent(const History& h1, const History& h2);
/// All pairs; returns the first inconsistent pair.
std::optional<std::pair<std::string, std::string>> check_all_consistent(const Configuration& c);

/// Store holds exactly the acts each live recipient has yet to receive.
std::optional<std::string> check_store_invariant(const Configuration& c);

class ReplayDivergence : public std::runtime_error {
public:
    explicit ReplayDivergence(const std::string& w) : std::runtime_error(w) {}
};

/// Folds a history through the rules: own acts as outputs, others' as inputs.
Term replay_state(const History& h, const Contract& contract, const std::string& agent, const Term& initial,
                  std::size_t silent_cap = 1000);

/// Initial state of every agent: activation terms, then `activated` acts.
std::map<std::string, Term> initial_states(const Ledger& l, const Program& p);

struct BalanceModel {
    enum class Kind { Unit, Amount };
    Kind kind = Kind::Unit;
    std::string tick_signer;  // empty: no minting
};

/// c + received - paid, over `pay(W)` acts (Unit) or `pay(W, X)` acts
/// (Amount), plus one coin per act `tick` signed by the tick signer.
Decimal balance_of(const History& h, const std::string& u, const Decimal& c, const BalanceModel& m = {});

struct CheckResult {
    std::string name;
    bool ok = true;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool ok() const;
    std::string text() const;
    std::string json() const;
};

/// Rebuilds the ledger and store from a JSON-lines trace and checks the
/// record structure, FIFO delivery, soundness and consistency at every
/// step, the store invariant, replay against the final states and, for
/// currency contracts, balances.
VerifyReport verify_trace(const Contract& contract, const std::vector<TraceEvent>& events);

}  // namespace scpl
