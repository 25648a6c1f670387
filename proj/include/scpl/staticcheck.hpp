#pragma once

#include "scpl/program.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

struct Violation {
    enum class Kind { ExplicitND, MissingInitRule, UnknownRole, UnboundConditionVar };
    Kind kind;
    std::string role;
    std::vector<SourceSpan> spans;
    std::string message;
    // ExplicitND only
    std::optional<Substitution> witness;
    std::vector<Term> posts;
    std::vector<std::string> rules;  // rendered rules of the pair
};

const char* to_string(Violation::Kind k);

/// `file:line:col: kind: message`
std::string format_diagnostic(const std::string& file, const Violation& v);
/// One JSON object, no trailing newline.
std::string format_diagnostic_json(const std::string& file, const Violation& v);

struct CheckedProgram {
    Program program;  // desugared and signed
    std::vector<Violation> diagnostics;

    bool clean() const { return diagnostics.empty(); }
};

/// Intermediate-state names for desugaring: `x`, `x1`, `x2`, ... skipping
/// every name already used anywhere in the program.
class IntermediateNames {
public:
    explicit IntermediateNames(const Program& p);
    std::string next();

private:
    std::set<std::string> used_;
    std::size_t counter_ = 0;
};

RoleProgram desugar_combined(const RoleProgram& role, IntermediateNames& fresh);
RoleProgram insert_signatures(const RoleProgram& role);

/// Name Self is bound to during the static check.
inline const std::string kSelfConstant = "$self";

std::vector<Violation> check_explicit_nd(const std::vector<RoleProgram>& roles);
std::vector<Violation> validate_roles(const Program& program);

/// All passes: validation on the parsed program, then desugaring, signature
/// insertion and the nondeterminism check.
CheckedProgram check_program(const Program& program);

class UniverseTooLarge : public std::runtime_error {
public:
    explicit UniverseTooLarge(const std::string& w) : std::runtime_error(w) {}
};

/// Ground instances over a finite universe with Self bound to `self_name`.
/// Conditions are evaluated (produced variables computed, choices
/// enumerated) and dropped from the result; failing instances are skipped.
std::vector<Rule> ground_instances(const Rule& rule, const std::vector<Term>& universe,
                                   const std::string& self_name, std::size_t cap = 100000);

/// Variables a rule needs grounded from outside (pre, input, act, spawn,
/// post and condition reads) minus Self and condition-produced ones.
std::vector<std::string> free_rule_vars(const Rule& r);

}  // namespace scpl
