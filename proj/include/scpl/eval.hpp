#pragma once

#include "scpl/program.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

class ArithmeticOnNonNumber : public std::runtime_error {
public:
    explicit ArithmeticOnNonNumber(const std::string& what) : std::runtime_error(what) {}
};

/// `+`, `-`, `*` compounds (and unary `-`).
bool is_arith_expr(const Term& t);

/// Value of an arithmetic expression; nullopt when a variable is unbound.
std::optional<Decimal> eval_arith(const Term& e, const Substitution& theta);

/// Value of a condition operand: arithmetic is evaluated, other terms are
/// substituted. nullopt when not ground.
std::optional<Term> eval_value(const Term& e, const Substitution& theta);

struct EvalResult {
    enum class Status { Ok, Failed, NeedsChoice };
    Status status = Status::Ok;
    Substitution theta;
    std::string choice_var;     // NeedsChoice
    std::vector<Term> options;  // NeedsChoice
    std::string diagnostic;     // Failed

    bool ok() const { return status == Status::Ok; }
};

/// Left to right. Assign extends theta; AssignChoice whose variable is
/// already bound checks membership, otherwise stops with NeedsChoice.
/// Throws ArithmeticOnNonNumber.
EvalResult eval_conditions(const std::vector<Condition>& conds, Substitution theta);

/// Proper list to vector; nullopt for partial or improper lists.
std::optional<std::vector<Term>> list_items(const Term& t);

}  // namespace scpl
