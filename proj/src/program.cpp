#include "scpl/program.hpp"

#include <sstream>

namespace scpl {

const char* to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "=<";
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "=\\=";
    }
    return "?";
}

const char* to_string(RuleKind k) {
    switch (k) {
        case RuleKind::Input: return "input";
        case RuleKind::Output: return "output";
        case RuleKind::Combined: return "combined";
        case RuleKind::Silent: return "silent";
    }
    return "?";
}

namespace {

bool is_arith(const Term& t) {
    return t.is_compound() && (t.text() == "+" || t.text() == "-" || t.text() == "*") && t.arity() <= 2;
}

std::string render_expr(const Term& t) {
    if (!is_arith(t)) return render(t);
    if (t.arity() == 1) return "-" + render_expr(t.arg(0));
    auto side = [](const Term& s) {
        return is_arith(s) && s.arity() == 2 ? "(" + render_expr(s) + ")" : render_expr(s);
    };
    return side(t.arg(0)) + " " + t.text() + " " + side(t.arg(1));
}

}  // namespace

std::string render(const Condition& c) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Assign>) {
                return x.var + " := " + render_expr(x.expr);
            } else if constexpr (std::is_same_v<T, AssignChoice>) {
                std::string s = x.var + " := ";
                for (std::size_t i = 0; i < x.options.size(); ++i) {
                    if (i) s += (i + 1 == x.options.size()) ? ", or " : ", ";
                    s += render_expr(x.options[i]);
                }
                return s;
            } else if constexpr (std::is_same_v<T, Compare>) {
                return render_expr(x.lhs) + " " + to_string(x.op) + " " + render_expr(x.rhs);
            } else {
                return std::string(x.op == ListOpKind::AppendElem ? "append_elem(" : "remove_elem(") +
                       render(x.elem) + ", " + render(x.list) + ", " + x.result + ")";
            }
        },
        c);
}

std::string produced_var(const Condition& c) {
    if (auto* a = std::get_if<Assign>(&c)) return a->var;
    if (auto* a = std::get_if<AssignChoice>(&c)) return a->var;
    if (auto* l = std::get_if<ListOp>(&c)) return l->result;
    return {};
}

std::vector<std::string> read_vars(const Condition& c) {
    std::vector<std::string> out;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Assign>) {
                collect_vars(x.expr, out);
            } else if constexpr (std::is_same_v<T, AssignChoice>) {
                for (const auto& o : x.options) collect_vars(o, out);
            } else if constexpr (std::is_same_v<T, Compare>) {
                collect_vars(x.lhs, out);
                collect_vars(x.rhs, out);
            } else {
                collect_vars(x.elem, out);
                collect_vars(x.list, out);
            }
        },
        c);
    return out;
}

RuleKind Rule::kind() const {
    if (input && emits()) return RuleKind::Combined;
    if (input) return RuleKind::Input;
    if (emits()) return RuleKind::Output;
    return RuleKind::Silent;
}

std::string render(const Rule& r) {
    std::ostringstream os;
    os << render(r.pre);
    if (r.input) os << ", " << r.input->str();
    os << " --> ";
    if (r.output) os << (r.signed_output ? "Self(" + render(*r.output) + ")" : render(*r.output)) << ", ";
    if (r.spawn) os << render(r.spawn->name) << '#' << render(r.spawn->state) << ", ";
    os << render(r.post);
    for (std::size_t i = 0; i < r.conditions.size(); ++i) os << (i ? " & " : " where ") << render(r.conditions[i]);
    os << '.';
    return os.str();
}

const RoleProgram* Program::role(const std::string& name) const {
    for (const auto& r : roles)
        if (r.name == name) return &r;
    return nullptr;
}

RoleProgram* Program::role(const std::string& name) {
    for (auto& r : roles)
        if (r.name == name) return &r;
    return nullptr;
}

std::size_t Program::rule_count() const {
    std::size_t n = 0;
    for (const auto& r : roles) n += r.rules.size();
    return n;
}

std::string state_functor(const Term& state) {
    if (state.is_name() || state.is_compound()) return state.text();
    return {};
}

}  // namespace scpl
