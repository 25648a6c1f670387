#pragma once

#include "scpl/term.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace scpl {

struct SourceSpan {
    int line = 0;
    int col = 0;
};

enum class CmpOp { Gt, Ge, Lt, Le, Eq, Ne };
const char* to_string(CmpOp op);

/// `V := expr`
struct Assign {
    std::string var;
    Term expr;
};
/// `V := e1, e2, or e3`
struct AssignChoice {
    std::string var;
    std::vector<Term> options;
};
struct Compare {
    CmpOp op;
    Term lhs, rhs;
};
enum class ListOpKind { AppendElem, RemoveElem };
/// `append_elem(E, L, R)` / `remove_elem(E, L, R)`
struct ListOp {
    ListOpKind op;
    Term elem, list;
    std::string result;
};
using Condition = std::variant<Assign, AssignChoice, Compare, ListOp>;

std::string render(const Condition& c);
/// Variable produced by the condition, or empty for Compare.
std::string produced_var(const Condition& c);
/// Variables read by the condition.
std::vector<std::string> read_vars(const Condition& c);

/// `Name#State` on a rule's right-hand side. `name` is a Name or a Var.
struct Spawn {
    Term name;
    Term state;
    bool autonomous() const { return name.is_name() && name.text() == "autonomous"; }
};

enum class RuleKind { Input, Output, Combined, Silent };
const char* to_string(RuleKind k);

struct Rule {
    Term pre;
    std::optional<ActPattern> input;
    std::optional<Term> output;  // payload only
    std::optional<Spawn> spawn;
    Term post;
    std::vector<Condition> conditions;
    SourceSpan origin;
    bool signed_output = false;  // set by insert_signatures: output is Self(payload)
    bool reactive = false;       // output half of a desugared combined rule

    RuleKind kind() const;
    bool emits() const { return output.has_value() || spawn.has_value(); }
    bool silent() const { return !input && !emits(); }
    bool stops() const { return post.is_name() && post.text() == "stop"; }
};

std::string render(const Rule& r);

struct RoleProgram {
    std::string name;
    std::vector<Rule> rules;
};

struct Program {
    std::string source_name;
    std::vector<std::pair<std::string, Term>> activation;
    std::vector<RoleProgram> roles;  // in order of first appearance

    const RoleProgram* role(const std::string& name) const;
    RoleProgram* role(const std::string& name);
    std::size_t rule_count() const;
};

/// Functor of a state term (`host` for `host(free)`, `tourist` for `tourist`).
std::string state_functor(const Term& state);

}  // namespace scpl
