#include "scpl/staticcheck.hpp"

#include "scpl/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

namespace scpl {

const char* to_string(Violation::Kind k) {
    switch (k) {
        case Violation::Kind::ExplicitND: return "ExplicitND";
        case Violation::Kind::MissingInitRule: return "MissingInitRule";
        case Violation::Kind::UnknownRole: return "UnknownRole";
        case Violation::Kind::UnboundConditionVar: return "UnboundConditionVar";
    }
    return "?";
}

std::string format_diagnostic(const std::string& file, const Violation& v) {
    SourceSpan at = v.spans.empty() ? SourceSpan{1, 1} : v.spans.front();
    std::ostringstream os;
    os << file << ':' << at.line << ':' << at.col << ": " << to_string(v.kind) << ": " << v.message;
    return os.str();
}

std::string format_diagnostic_json(const std::string& file, const Violation& v) {
    nlohmann::json j;
    j["file"] = file;
    j["kind"] = to_string(v.kind);
    j["role"] = v.role;
    j["message"] = v.message;
    j["spans"] = nlohmann::json::array();
    for (const auto& s : v.spans) j["spans"].push_back({{"line", s.line}, {"col", s.col}});
    if (v.witness) {
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [k, t] : *v.witness) w[k] = render(t);
        j["witness"] = w;
        j["posts"] = nlohmann::json::array();
        for (const auto& p : v.posts) j["posts"].push_back(render(p));
    }
    return j.dump();
}

// ---------------------------------------------------------------- desugaring

namespace {

void collect_names(const Term& t, std::set<std::string>& out) {
    if (t.is_var() || t.is_number()) return;
    out.insert(t.text());
    for (const auto& a : t.args()) collect_names(a, out);
}

void collect_rule_names(const Rule& r, std::set<std::string>& out) {
    collect_names(r.pre, out);
    collect_names(r.post, out);
    if (r.input) {
        collect_names(r.input->payload, out);
        if (r.input->signer_kind == ActPattern::Signer::Name) out.insert(r.input->signer);
    }
    if (r.output) collect_names(*r.output, out);
    if (r.spawn) {
        collect_names(r.spawn->name, out);
        collect_names(r.spawn->state, out);
    }
    for (const auto& c : r.conditions) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, Assign>) collect_names(x.expr, out);
                else if constexpr (std::is_same_v<T, AssignChoice>) {
                    for (const auto& o : x.options) collect_names(o, out);
                } else if constexpr (std::is_same_v<T, Compare>) {
                    collect_names(x.lhs, out);
                    collect_names(x.rhs, out);
                } else {
                    collect_names(x.elem, out);
                    collect_names(x.list, out);
                }
            },
            c);
    }
}

std::vector<std::string> lhs_vars(const Rule& r) {
    std::vector<std::string> v = vars_of(r.pre);
    if (r.input) {
        if (r.input->signer_kind == ActPattern::Signer::Var) {
            if (std::find(v.begin(), v.end(), r.input->signer) == v.end()) v.push_back(r.input->signer);
        }
        collect_vars(r.input->payload, v);
    }
    return v;
}

std::vector<std::string> rhs_vars(const Rule& r) {
    std::vector<std::string> v;
    if (r.output) collect_vars(*r.output, v);
    if (r.spawn) {
        collect_vars(r.spawn->name, v);
        collect_vars(r.spawn->state, v);
    }
    collect_vars(r.post, v);
    for (const auto& c : r.conditions)
        for (const auto& x : read_vars(c))
            if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    return v;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

IntermediateNames::IntermediateNames(const Program& p) {
    for (const auto& role : p.roles) {
        used_.insert(role.name);
        for (const auto& r : role.rules) collect_rule_names(r, used_);
    }
    for (const auto& [agent, state] : p.activation) {
        used_.insert(agent);
        collect_names(state, used_);
    }
}

std::string IntermediateNames::next() {
    for (;;) {
        std::string n = counter_ == 0 ? "x" : "x" + std::to_string(counter_);
        ++counter_;
        if (used_.insert(n).second) return n;
    }
}

RoleProgram desugar_combined(const RoleProgram& role, IntermediateNames& fresh) {
    RoleProgram out{role.name, {}};
    for (const auto& r : role.rules) {
        if (r.kind() != RuleKind::Combined) {
            out.rules.push_back(r);
            continue;
        }
        std::vector<std::string> rhs = rhs_vars(r);
        std::vector<Term> shared;
        for (const auto& v : lhs_vars(r))
            if (v != "Self" && contains(rhs, v)) shared.push_back(Term::var(v));
        Term mid = Term::compound(fresh.next(), shared);

        Rule in;
        in.pre = r.pre;
        in.input = r.input;
        in.post = mid;
        in.origin = r.origin;
        Rule outr;
        outr.pre = mid;
        outr.output = r.output;
        outr.spawn = r.spawn;
        outr.post = r.post;
        outr.conditions = r.conditions;
        outr.origin = r.origin;
        outr.signed_output = r.signed_output;
        outr.reactive = true;
        out.rules.push_back(std::move(in));
        out.rules.push_back(std::move(outr));
    }
    return out;
}

RoleProgram insert_signatures(const RoleProgram& role) {
    RoleProgram out = role;
    for (auto& r : out.rules)
        if (r.output) r.signed_output = true;
    return out;
}

// ---------------------------------------------------------------- ND check

namespace {

Term normalize_arith(const Term& t) {
    if (t.is_var() || t.is_name() || t.is_number()) return t;
    if (is_arith_expr(t) && t.ground()) {
        try {
            if (auto v = eval_arith(t, {})) return Term::number(*v);
        } catch (const ArithmeticOnNonNumber&) {
        }
        return t;
    }
    std::vector<Term> args;
    for (const auto& a : t.args()) args.push_back(normalize_arith(a));
    return Term::compound(t.text(), std::move(args));
}

struct Prepared {
    Term pre, key, post;
    bool input = false, emits = false, silent = false;
    Term signer;  // input only
    std::vector<Compare> compares;
    const Rule* src = nullptr;
};

Term apply_all(const Term& t, const Substitution& s) { return normalize_arith(substitute(t, s)); }

Prepared prepare(const Rule& r, FreshNames& fresh) {
    Substitution ex{{"Self", Term::name(kSelfConstant)}};
    for (const auto& c : r.conditions) {
        if (const auto* a = std::get_if<Assign>(&c)) {
            ex[a->var] = substitute(a->expr, ex);
        } else if (const auto* l = std::get_if<ListOp>(&c)) {
            ex[l->result] = Term::compound(l->op == ListOpKind::AppendElem ? "append_elem" : "remove_elem",
                                           {substitute(l->elem, ex), substitute(l->list, ex)});
        }
    }
    Prepared p;
    p.src = &r;
    p.input = r.input.has_value();
    p.emits = r.emits();
    p.silent = r.silent();
    Term none = Term::name("$none");
    std::vector<Term> parts{r.pre, r.post};
    if (p.input) {
        const auto& in = *r.input;
        Term signer = in.signer_kind == ActPattern::Signer::Var    ? Term::var(in.signer)
                      : in.signer_kind == ActPattern::Signer::Name ? Term::name(in.signer)
                                                                   : Term::var(fresh.next());
        parts.push_back(Term::compound("$in", {signer, in.payload}));
    } else if (p.emits) {
        Term act = r.output ? *r.output : none;
        Term spawn = none;
        if (r.spawn) {
            Term name = r.spawn->autonomous() ? Term::var(fresh.next()) : r.spawn->name;
            spawn = Term::compound("activated", {name, r.spawn->state});
        }
        parts.push_back(Term::compound("$out", {act, spawn}));
    } else {
        parts.push_back(Term::name("$silent"));
    }
    // Rename every variable apart, together with the comparisons.
    Substitution ren;
    for (auto& t : parts) t = rename_fresh(apply_all(t, ex), fresh, ren);
    p.pre = parts[0];
    p.post = parts[1];
    p.key = parts[2];
    if (p.input) p.signer = p.key.arg(0);
    for (const auto& c : r.conditions)
        if (const auto* cmp = std::get_if<Compare>(&c))
            p.compares.push_back({cmp->op, rename_fresh(apply_all(cmp->lhs, ex), fresh, ren),
                                  rename_fresh(apply_all(cmp->rhs, ex), fresh, ren)});
    return p;
}

CmpOp flip(CmpOp op) {
    switch (op) {
        case CmpOp::Gt: return CmpOp::Lt;
        case CmpOp::Ge: return CmpOp::Le;
        case CmpOp::Lt: return CmpOp::Gt;
        case CmpOp::Le: return CmpOp::Ge;
        default: return op;
    }
}

// True when the comparisons can be shown to have no common solution.
bool infeasible(const std::vector<Compare>& cs) {
    struct Bounds {
        std::optional<Decimal> lo, hi;
        bool lo_strict = false, hi_strict = false;
    };
    std::map<std::string, Bounds> bounds;
    auto tighten_lo = [](Bounds& b, const Decimal& v, bool strict) {
        if (!b.lo || v > *b.lo || (v == *b.lo && strict)) {
            b.lo = v;
            b.lo_strict = strict;
        }
    };
    auto tighten_hi = [](Bounds& b, const Decimal& v, bool strict) {
        if (!b.hi || v < *b.hi || (v == *b.hi && strict)) {
            b.hi = v;
            b.hi_strict = strict;
        }
    };
    for (const auto& c : cs) {
        Term l = normalize_arith(c.lhs), r = normalize_arith(c.rhs);
        if (l.ground() && r.ground()) {
            try {
                if (!eval_conditions({Compare{c.op, l, r}}, {}).ok()) return true;
            } catch (const ArithmeticOnNonNumber&) {
                return true;
            }
            continue;
        }
        if (c.op == CmpOp::Ne && l == r) return true;
        CmpOp op = c.op;
        Term var_side = l;
        Decimal k;
        if (r.is_number()) {
            k = r.value();
        } else if (l.is_number()) {
            k = l.value();
            var_side = r;
            op = flip(op);
        } else {
            continue;
        }
        Bounds& b = bounds[render(var_side)];
        switch (op) {
            case CmpOp::Gt: tighten_lo(b, k, true); break;
            case CmpOp::Ge: tighten_lo(b, k, false); break;
            case CmpOp::Lt: tighten_hi(b, k, true); break;
            case CmpOp::Le: tighten_hi(b, k, false); break;
            case CmpOp::Eq:
                tighten_lo(b, k, false);
                tighten_hi(b, k, false);
                break;
            case CmpOp::Ne: break;
        }
    }
    for (const auto& [_, b] : bounds) {
        if (!b.lo || !b.hi) continue;
        if (*b.lo > *b.hi) return true;
        if (*b.lo == *b.hi && (b.lo_strict || b.hi_strict)) return true;
    }
    return false;
}

std::string span_str(const SourceSpan& s) { return std::to_string(s.line) + ":" + std::to_string(s.col); }

}  // namespace

std::vector<Violation> check_explicit_nd(const std::vector<RoleProgram>& roles) {
    std::vector<Violation> out;
    FreshNames fresh("_R");
    for (const auto& role : roles) {
        const auto& rules = role.rules;
        for (std::size_t i = 0; i < rules.size(); ++i) {
            for (std::size_t j = i; j < rules.size(); ++j) {
                Prepared a = prepare(rules[i], fresh);
                Prepared b = prepare(rules[j], fresh);
                if (!a.silent && !b.silent && a.input != b.input) continue;
                bool pre_only = a.silent || b.silent;
                Term ta = pre_only ? a.pre : Term::compound("$t", {a.pre, a.key});
                Term tb = pre_only ? b.pre : Term::compound("$t", {b.pre, b.key});
                auto theta = unify(ta, tb);
                if (!theta) continue;
                if (a.input && b.input && !pre_only) {
                    Term s = substitute(a.signer, *theta);
                    if (s.is_name() && s.text() == kSelfConstant) continue;  // own acts are never inputs
                }
                Term pa = apply_all(a.post, *theta), pb = apply_all(b.post, *theta);
                if (pa == pb) continue;
                std::vector<Compare> cs;
                for (const auto* p : {&a, &b})
                    for (const auto& c : p->compares)
                        cs.push_back({c.op, apply_all(c.lhs, *theta), apply_all(c.rhs, *theta)});
                if (infeasible(cs)) continue;

                Violation v;
                v.kind = Violation::Kind::ExplicitND;
                v.role = role.name;
                v.spans = {rules[i].origin, rules[j].origin};
                v.witness = *theta;
                v.posts = {pa, pb};
                v.rules = {render(rules[i]), render(rules[j])};
                std::ostringstream msg;
                msg << "rules at " << span_str(rules[i].origin) << " and " << span_str(rules[j].origin)
                    << (i == j ? " (self-overlap)" : "") << " overlap on " << render(substitute(ta, *theta))
                    << " but reach " << render(pa) << " vs " << render(pb) << "; unifier " << render(*theta);
                v.message = msg.str();
                out.push_back(std::move(v));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- validation

std::vector<Violation> validate_roles(const Program& program) {
    std::vector<Violation> out;
    // Entry points per role: bare (role name) or parameterized states.
    std::map<std::string, std::pair<bool, bool>> entries;  // role -> (bare, parameterized)
    auto note_entry = [&](const Term& state, SourceSpan at, const std::string& where) {
        std::string f = state_functor(state);
        if (!program.role(f)) {
            Violation v;
            v.kind = Violation::Kind::UnknownRole;
            v.role = f;
            v.spans = {at};
            v.message = where + " refers to role " + f + " which has no rules";
            out.push_back(std::move(v));
            return;
        }
        auto& e = entries[f];
        (state.is_name() ? e.first : e.second) = true;
    };
    for (const auto& [agent, state] : program.activation) note_entry(state, {1, 1}, "activation of " + agent);
    for (const auto& role : program.roles)
        for (const auto& r : role.rules)
            if (r.spawn) note_entry(r.spawn->state, r.origin, "spawn");

    for (const auto& role : program.roles) {
        bool has_init = false;
        for (const auto& r : role.rules) has_init = has_init || (r.pre.is_name() && r.pre.text() == role.name);
        auto it = entries.find(role.name);
        bool parameterized_only = it != entries.end() && !it->second.first && it->second.second;
        if (!has_init && !parameterized_only) {
            Violation v;
            v.kind = Violation::Kind::MissingInitRule;
            v.role = role.name;
            v.spans = {role.rules.empty() ? SourceSpan{1, 1} : role.rules.front().origin};
            v.message = "role " + role.name + " has no rule with pre-state " + role.name;
            out.push_back(std::move(v));
        }
        for (const auto& r : role.rules) {
            std::vector<std::string> bound = lhs_vars(r);
            bound.push_back("Self");
            if (r.output) collect_vars(*r.output, bound);
            if (r.spawn) {
                collect_vars(r.spawn->name, bound);
                collect_vars(r.spawn->state, bound);
            }
            for (const auto& c : r.conditions) {
                for (const auto& x : read_vars(c)) {
                    if (contains(bound, x)) continue;
                    Violation v;
                    v.kind = Violation::Kind::UnboundConditionVar;
                    v.role = role.name;
                    v.spans = {r.origin};
                    v.message = "condition `" + render(c) + "` reads " + x + " before it is bound";
                    out.push_back(std::move(v));
                }
                std::string p = produced_var(c);
                if (!p.empty()) bound.push_back(p);
            }
        }
    }
    return out;
}

CheckedProgram check_program(const Program& program) {
    CheckedProgram cp;
    cp.diagnostics = validate_roles(program);
    cp.program.source_name = program.source_name;
    cp.program.activation = program.activation;
    IntermediateNames names(program);
    for (const auto& role : program.roles) cp.program.roles.push_back(insert_signatures(desugar_combined(role, names)));
    auto nd = check_explicit_nd(cp.program.roles);
    cp.diagnostics.insert(cp.diagnostics.end(), nd.begin(), nd.end());
    std::stable_sort(cp.diagnostics.begin(), cp.diagnostics.end(), [](const Violation& a, const Violation& b) {
        SourceSpan x = a.spans.empty() ? SourceSpan{} : a.spans.front();
        SourceSpan y = b.spans.empty() ? SourceSpan{} : b.spans.front();
        return std::tie(x.line, x.col) < std::tie(y.line, y.col);
    });
    return cp;
}

// ---------------------------------------------------------------- grounding

std::vector<std::string> free_rule_vars(const Rule& r) {
    std::vector<std::string> v = lhs_vars(r);
    for (const auto& x : rhs_vars(r))
        if (!contains(v, x)) v.push_back(x);
    std::vector<std::string> produced;
    for (const auto& c : r.conditions)
        if (auto p = produced_var(c); !p.empty()) produced.push_back(p);
    std::vector<std::string> out;
    for (const auto& x : v)
        if (x != "Self" && !contains(produced, x)) out.push_back(x);
    return out;
}

std::vector<Rule> ground_instances(const Rule& source, const std::vector<Term>& universe, const std::string& self_name,
                                   std::size_t cap) {
    // A wildcard signer ranges over the universe like any other variable.
    Rule rule = source;
    if (rule.input && rule.input->signer_kind == ActPattern::Signer::Wildcard)
        rule.input = ActPattern::by_var("$w", rule.input->payload);
    std::vector<std::string> vars = free_rule_vars(rule);
    double count = 1;
    for (std::size_t i = 0; i < vars.size(); ++i) count *= static_cast<double>(universe.size());
    if (count > static_cast<double>(cap))
        throw UniverseTooLarge(std::to_string(vars.size()) + " variables over a universe of " +
                               std::to_string(universe.size()) + " exceed the instance cap");

    std::vector<Rule> out;
    std::set<std::string> seen;
    auto emit = [&](const Substitution& theta) {
        Rule g = rule;
        g.pre = substitute(rule.pre, theta);
        g.post = substitute(rule.post, theta);
        if (rule.output) g.output = substitute(*rule.output, theta);
        if (rule.spawn) g.spawn = Spawn{substitute(rule.spawn->name, theta), substitute(rule.spawn->state, theta)};
        if (rule.input) {
            g.input = substitute(*rule.input, theta);
            if (g.input->signer_kind == ActPattern::Signer::Var) return;  // signer bound to a non-name
            if (!g.input->payload.ground()) return;
        }
        if (rule.spawn && !(g.spawn->name.is_name() && g.spawn->state.ground())) return;
        if (!g.pre.ground() || !g.post.ground() || (g.output && !g.output->ground())) return;
        g.conditions.clear();
        if (seen.insert(render(g)).second) out.push_back(std::move(g));
    };
    std::function<void(Substitution)> finish = [&](Substitution theta) {
        EvalResult r;
        try {
            r = eval_conditions(rule.conditions, theta);
        } catch (const ArithmeticOnNonNumber&) {
            return;
        }
        if (r.status == EvalResult::Status::Failed) return;
        if (r.status == EvalResult::Status::NeedsChoice) {
            for (const auto& o : r.options) {
                Substitution t = theta;
                t[r.choice_var] = o;
                finish(std::move(t));
            }
            return;
        }
        emit(r.theta);
    };
    std::function<void(std::size_t, Substitution&)> rec = [&](std::size_t k, Substitution& theta) {
        if (k == vars.size()) {
            finish(theta);
            return;
        }
        for (const auto& u : universe) {
            theta[vars[k]] = u;
            rec(k + 1, theta);
        }
        theta.erase(vars[k]);
    };
    Substitution theta{{"Self", Term::name(self_name)}};
    rec(0, theta);
    return out;
}

}  // namespace scpl
