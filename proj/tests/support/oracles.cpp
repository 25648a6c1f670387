#include "oracles.hpp"

#include <algorithm>
#include <deque>

namespace oracle {

using scpl::Substitution;

Term apply(const Term& t, const Substitution& s) {
    if (t.is_var()) {
        auto it = s.find(t.text());
        return it == s.end() ? t : it->second;
    }
    if (!t.is_compound()) return t;
    std::vector<Term> args;
    for (const auto& a : t.args()) args.push_back(oracle::apply(a, s));
    return Term::compound(t.text(), std::move(args));
}

namespace {

bool occurs(const std::string& v, const Term& t) {
    if (t.is_var()) return t.text() == v;
    if (!t.is_compound()) return false;
    for (const auto& a : t.args())
        if (occurs(v, a)) return true;
    return false;
}

bool same_atom(const Term& a, const Term& b) {
    if (a.is_name() && b.is_name()) return a.text() == b.text();
    if (a.is_number() && b.is_number()) return a.value() == b.value();
    return false;
}

bool instance_into(const Term& s, const Term& g, Substitution& m) {
    if (g.is_var()) {
        auto it = m.find(g.text());
        if (it == m.end()) {
            m[g.text()] = s;
            return true;
        }
        return it->second == s;
    }
    if (g.is_compound()) {
        if (!s.is_compound() || s.text() != g.text() || s.arity() != g.arity()) return false;
        for (std::size_t i = 0; i < g.arity(); ++i)
            if (!instance_into(s.arg(i), g.arg(i), m)) return false;
        return true;
    }
    return same_atom(s, g);
}

}  // namespace

std::optional<Substitution> brute_unify(const Term& a, const Term& b) {
    std::deque<std::pair<Term, Term>> eqs{{a, b}};
    Substitution solved;
    while (!eqs.empty()) {
        auto [l, r] = eqs.front();
        eqs.pop_front();
        if (l.is_var() && r.is_var() && l.text() == r.text()) continue;
        if (!l.is_var() && r.is_var()) std::swap(l, r);
        if (l.is_var()) {
            if (occurs(l.text(), r)) return std::nullopt;
            // Eliminate l everywhere.
            Substitution one{{l.text(), r}};
            for (auto& [k, v] : solved) v = oracle::apply(v, one);
            for (auto& e : eqs) {
                e.first = oracle::apply(e.first, one);
                e.second = oracle::apply(e.second, one);
            }
            solved[l.text()] = r;
            continue;
        }
        if (l.is_compound() && r.is_compound()) {
            if (l.text() != r.text() || l.arity() != r.arity()) return std::nullopt;
            for (std::size_t i = 0; i < l.arity(); ++i) eqs.push_back({l.arg(i), r.arg(i)});
            continue;
        }
        if (!same_atom(l, r)) return std::nullopt;
    }
    return solved;
}

bool instance_of(const Term& specific, const Term& general) {
    Substitution m;
    return instance_into(specific, general, m);
}

Term random_term(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 5);
    switch (pick(rng)) {
        case 0: return Term::var("X");
        case 1: return Term::var("Y");
        case 2: return Term::var("Z");
        case 3: return Term::name("a");
        case 4: return Term::name("b");
        case 5: return Term::number(0);
        case 6: return Term::compound("g", {random_term(rng, depth - 1)});
        default: return Term::compound("f", {random_term(rng, depth - 1), random_term(rng, depth - 1)});
    }
}

std::vector<NdPair> brute_nd(const scpl::RoleProgram& role, const std::vector<Term>& universe,
                             const std::string& self_name) {
    struct Inst {
        std::size_t rule;
        std::string act;  // empty: degenerate
        std::string post;
    };
    std::map<std::string, std::vector<Inst>> by_pre;
    for (std::size_t i = 0; i < role.rules.size(); ++i) {
        for (const auto& g : scpl::ground_instances(role.rules[i], universe, self_name)) {
            std::string act;
            if (g.input) act = "in:" + g.input->str();
            if (g.output) act += "out:" + scpl::render(*g.output);
            if (g.spawn) act += "spawn:" + scpl::render(g.spawn->name) + "#" + scpl::render(g.spawn->state);
            by_pre[scpl::render(g.pre)].push_back({i, act, scpl::render(g.post)});
        }
    }
    std::set<std::pair<std::size_t, std::size_t>> bad;
    for (const auto& [pre, insts] : by_pre) {
        for (std::size_t x = 0; x < insts.size(); ++x) {
            for (std::size_t y = x + 1; y < insts.size(); ++y) {
                const Inst &p = insts[x], &q = insts[y];
                if (p.post == q.post) continue;
                if (p.act.empty() || q.act.empty() || p.act == q.act)
                    bad.insert({std::min(p.rule, q.rule), std::max(p.rule, q.rule)});
            }
        }
    }
    std::vector<NdPair> out;
    for (const auto& [a, b] : bad) out.push_back({a, b});
    return out;
}

namespace {

using Hist = std::vector<std::pair<std::string, std::string>>;
using Led = std::map<std::string, Hist>;

std::string label(const Led& l) {
    std::string s;
    for (const auto& [v, h] : l) {
        s += v + ":[";
        for (std::size_t i = 0; i < h.size(); ++i) s += (i ? "," : "") + h[i].first + "." + h[i].second;
        s += "];";
    }
    return s;
}

std::string hist_text(const Hist& h) {
    std::string s;
    for (const auto& [u, a] : h) s += u + "." + a + ",";
    return s;
}

}  // namespace

ScGraph sc_reachable(const std::vector<std::string>& agents, const Policy& policy) {
    ScGraph g;
    Led l0;
    for (const auto& a : agents) l0[a];
    std::deque<Led> todo{l0};
    g.states.insert(label(l0));
    while (!todo.empty()) {
        Led l = todo.front();
        todo.pop_front();
        std::string from = label(l);
        for (const auto& v : agents) {
            std::vector<std::pair<std::string, std::string>> moves;
            for (const auto& a : policy(v, l[v])) moves.push_back({v, a});
            for (const auto& u : agents) {
                if (u == v) continue;
                Hist diag, seen;
                for (const auto& e : l[u])
                    if (e.first == u) diag.push_back(e);
                for (const auto& e : l[v])
                    if (e.first == u) seen.push_back(e);
                if (seen.size() < diag.size()) moves.push_back(diag[seen.size()]);
            }
            for (const auto& m : moves) {
                g.rules.insert(v + "|" + hist_text(l[v]) + "|" + m.first + "." + m.second);
                Led n = l;
                n[v].push_back(m);
                std::string to = label(n);
                g.edges.insert({from, to});
                if (g.states.insert(to).second) todo.push_back(std::move(n));
            }
        }
    }
    return g;
}

std::string label_of(const scpl::Configuration& c) {
    Led l;
    for (const auto& a : c.order) {
        Term t = c.agents.at(a).state.arg(1);
        Hist& h = l[a];
        while (t.is_compound() && t.text() == "." && t.arity() == 2) {
            const Term& e = t.arg(0);
            h.push_back({e.text(), scpl::render(e.arg(0))});
            t = t.arg(1);
        }
    }
    return label(l);
}

bool tally(const std::vector<int>& deltas) {
    long sum = 0;
    for (int d : deltas) sum += d;
    return sum > 0;
}

}  // namespace oracle
