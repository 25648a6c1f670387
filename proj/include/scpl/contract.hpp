#pragma once

#include "scpl/staticcheck.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace scpl {

/// A signed utterance. `seq` is the signer's 1-based output index.
struct Act {
    std::string signer;
    Term payload;
    std::uint64_t seq = 0;

    friend bool operator==(const Act& a, const Act& b) {
        return a.seq == b.seq && a.signer == b.signer && a.payload == b.payload;
    }
};
using History = std::vector<Act>;

std::string render(const Act& a);  // `signer(payload)`

/// Faults that halt a run (CLI exit status 3).
class ContractFault : public std::runtime_error {
public:
    ContractFault(std::string kind, const std::string& what) : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define SCPL_FAULT(Name)                                                             \
    class Name : public ContractFault {                                              \
    public:                                                                          \
        explicit Name(const std::string& what) : ContractFault(#Name, what) {}       \
    }
SCPL_FAULT(SilentLoop);
SCPL_FAULT(ConditionFailed);
SCPL_FAULT(NotEnabled);
SCPL_FAULT(SpawnCollision);
SCPL_FAULT(AutoOracleAmbiguous);
SCPL_FAULT(OracleScriptMismatch);
SCPL_FAULT(InvalidDecision);
#undef SCPL_FAULT

/// One way an agent may act from its current state. `theta` already holds
/// Self, the pre-state match and every condition that could be evaluated.
struct Alternative {
    const Rule* rule = nullptr;
    Substitution theta;
    std::vector<std::string> required_vars;  // must be supplied by a decision
    std::string choice_var;                  // pending `V := a, b, or c`
    std::vector<Term> choice_options;
    std::vector<Condition> residual;  // conditions left for decision time
    Term act_pattern;                 // payload, or activated(Name, State) for a bare spawn

    bool reactive() const { return rule->reactive; }
    bool ground() const { return required_vars.empty() && choice_var.empty(); }
};

/// A fully determined output transition.
struct GroundStep {
    const Rule* rule = nullptr;
    Substitution theta;
    std::optional<Term> payload;
    std::optional<Spawn> spawn;  // ground state; name ground or `autonomous`
    Term post;
};

/// A checked program indexed for execution. Cheap to copy.
class Contract {
public:
    explicit Contract(CheckedProgram checked);

    const Program& program() const { return data_->checked.program; }
    const CheckedProgram& checked() const { return data_->checked; }

    /// Rules whose pre-state has the functor and arity of `state`.
    const std::vector<const Rule*>& rules_for(const Term& state) const;

    /// Output alternatives enabled in `state` for agent `self`.
    std::vector<Alternative> alternatives(const Term& state, const std::string& self) const;

    /// Completes an alternative with decision bindings. nullopt (and `why`) when the
    /// bindings are not ground, name unknown variables, or break a condition.
    std::optional<GroundStep> bind(const Alternative& alt, const Substitution& bindings,
                                   std::string* why = nullptr) const;

    /// Post-state after receiving `signer(payload)`, or nullopt to discard.
    /// Throws ConditionFailed when a rule matches but its conditions fail.
    std::optional<Term> apply_input(const Term& state, const std::string& self, const std::string& signer,
                                    const Term& payload) const;

    /// Applies silent rules until none is enabled (or the state is `stop`).
    Term silent_closure(const Term& state, const std::string& self, std::size_t cap = 1000) const;

    /// Ground steps whose act (or bare spawn) is `payload`, consulting the
    /// spawn act that follows when the rule spawns. Used by replay.
    std::vector<GroundStep> explain_output(const Term& state, const std::string& self, const Term& payload,
                                           const std::optional<Term>& next_payload) const;

private:
    struct Data {
        CheckedProgram checked;
        std::unordered_map<std::string, std::vector<const Rule*>> index;
    };
    std::shared_ptr<const Data> data_;
};

bool is_stop(const Term& state);

/// `activated(Name, State)`, the act announcing a spawn.
Term activated_act(const Term& name, const Term& state);

}  // namespace scpl
