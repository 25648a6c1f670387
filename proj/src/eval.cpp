#include "scpl/eval.hpp"

#include <algorithm>

namespace scpl {

bool is_arith_expr(const Term& t) {
    if (!t.is_compound()) return false;
    const std::string& f = t.text();
    return ((f == "+" || f == "-" || f == "*") && t.arity() == 2) || (f == "-" && t.arity() == 1);
}

std::optional<Decimal> eval_arith(const Term& e, const Substitution& theta) {
    if (e.is_number()) return e.value();
    if (e.is_var()) {
        auto it = theta.find(e.text());
        if (it == theta.end()) return std::nullopt;
        if (it->second.is_var()) return std::nullopt;
        return eval_arith(it->second, theta);
    }
    if (is_arith_expr(e)) {
        auto a = eval_arith(e.arg(0), theta);
        if (!a) return std::nullopt;
        if (e.arity() == 1) return -*a;
        auto b = eval_arith(e.arg(1), theta);
        if (!b) return std::nullopt;
        if (e.text() == "+") return *a + *b;
        if (e.text() == "-") return *a - *b;
        return *a * *b;
    }
    Term v = substitute(e, theta);
    if (!v.ground()) return std::nullopt;
    throw ArithmeticOnNonNumber("arithmetic on non-number " + render(v));
}

std::optional<Term> eval_value(const Term& e, const Substitution& theta) {
    if (is_arith_expr(e)) {
        auto v = eval_arith(e, theta);
        if (!v) return std::nullopt;
        return Term::number(*v);
    }
    Term v = substitute(e, theta);
    if (!v.ground()) return std::nullopt;
    return v;
}

std::optional<std::vector<Term>> list_items(const Term& t) {
    std::vector<Term> out;
    Term cur = t;
    while (cur.is_cons()) {
        out.push_back(cur.arg(0));
        cur = cur.arg(1);
    }
    if (!cur.is_nil()) return std::nullopt;
    return out;
}

namespace {

bool compare_values(CmpOp op, const Term& a, const Term& b) {
    if (op == CmpOp::Eq || op == CmpOp::Ne) {
        bool eq = (a.is_number() && b.is_number()) ? a.value() == b.value() : a == b;
        return op == CmpOp::Eq ? eq : !eq;
    }
    if (!a.is_number()) throw ArithmeticOnNonNumber("comparison on non-number " + render(a));
    if (!b.is_number()) throw ArithmeticOnNonNumber("comparison on non-number " + render(b));
    auto c = a.value() <=> b.value();
    switch (op) {
        case CmpOp::Gt: return c > 0;
        case CmpOp::Ge: return c >= 0;
        case CmpOp::Lt: return c < 0;
        case CmpOp::Le: return c <= 0;
        default: return false;
    }
}

EvalResult failed(Substitution theta, std::string why) {
    EvalResult r;
    r.status = EvalResult::Status::Failed;
    r.theta = std::move(theta);
    r.diagnostic = std::move(why);
    return r;
}

// Binds var to value, or checks agreement when already bound.
bool bind_value(Substitution& theta, const std::string& var, const Term& value) {
    auto [it, inserted] = theta.emplace(var, value);
    if (inserted) return true;
    const Term& old = it->second;
    if (old.is_number() && value.is_number()) return old.value() == value.value();
    return old == value;
}

}  // namespace

EvalResult eval_conditions(const std::vector<Condition>& conds, Substitution theta) {
    for (const auto& c : conds) {
        if (const auto* a = std::get_if<Assign>(&c)) {
            auto v = eval_value(a->expr, theta);
            if (!v) return failed(std::move(theta), "UnboundConditionVar in " + render(c));
            if (!bind_value(theta, a->var, *v)) return failed(std::move(theta), "assignment disagrees: " + render(c));
        } else if (const auto* ch = std::get_if<AssignChoice>(&c)) {
            std::vector<Term> opts;
            for (const auto& o : ch->options) {
                auto v = eval_value(o, theta);
                if (!v) return failed(std::move(theta), "UnboundConditionVar in " + render(c));
                opts.push_back(*v);
            }
            auto it = theta.find(ch->var);
            if (it == theta.end()) {
                EvalResult r;
                r.status = EvalResult::Status::NeedsChoice;
                r.theta = std::move(theta);
                r.choice_var = ch->var;
                r.options = std::move(opts);
                return r;
            }
            bool member = false;
            for (const auto& o : opts) member = member || compare_values(CmpOp::Eq, o, it->second);
            if (!member) return failed(std::move(theta), "choice " + render(it->second) + " not offered by " + render(c));
        } else if (const auto* cmp = std::get_if<Compare>(&c)) {
            auto l = eval_value(cmp->lhs, theta);
            auto r = eval_value(cmp->rhs, theta);
            if (!l || !r) return failed(std::move(theta), "UnboundConditionVar in " + render(c));
            if (!compare_values(cmp->op, *l, *r)) return failed(std::move(theta), "condition false: " + render(c));
        } else {
            const auto& lo = std::get<ListOp>(c);
            Term elem = substitute(lo.elem, theta);
            auto items = list_items(substitute(lo.list, theta));
            if (!elem.ground() || !items) return failed(std::move(theta), "UnboundConditionVar in " + render(c));
            for (const auto& it : *items)
                if (!it.ground()) return failed(std::move(theta), "UnboundConditionVar in " + render(c));
            if (lo.op == ListOpKind::AppendElem) {
                items->push_back(elem);
            } else {
                auto pos = std::find(items->begin(), items->end(), elem);
                if (pos == items->end()) return failed(std::move(theta), render(elem) + " is not in the list");
                items->erase(pos);
            }
            if (!bind_value(theta, lo.result, Term::list(*items)))
                return failed(std::move(theta), "list result disagrees: " + render(c));
        }
    }
    EvalResult r;
    r.theta = std::move(theta);
    return r;
}

}  // namespace scpl
