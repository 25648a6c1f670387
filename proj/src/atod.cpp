#include "scpl/atod.hpp"

#include <algorithm>
#include <deque>

namespace scpl {

namespace {

std::size_t count_signed(const History& h, const std::string& u) {
    return static_cast<std::size_t>(std::count_if(h.begin(), h.end(), [&](const Act& a) { return a.signer == u; }));
}

Act act_of(const std::string& signer, const Term& payload, const History& h) {
    return Act{signer, payload, count_signed(h, signer) + 1};
}

std::string act_key(const Act& a) { return a.signer + "(" + render(a.payload) + ")"; }

// Next u-act v may take in from `l`, if any.
std::optional<Act> next_input(const ScLedger& l, const std::string& v, const std::string& u) {
    const History& hv = l.at(v);
    History diag = restrict(l.at(u), u);
    std::size_t k = count_signed(hv, u);
    if (k < diag.size()) return diag[k];
    return std::nullopt;
}

bool is_prefix(const History& a, const History& b) {
    return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

ScLedger ScTransition::after() const {
    ScLedger l = before;
    l[agent].push_back(act);
    return l;
}

ScLedger SocialContract::initial() const {
    ScLedger l;
    for (const auto& a : agents) l[a];
    return l;
}

Term encode_history(const History& h) {
    std::vector<Term> items;
    for (const auto& a : h) items.push_back(Term::compound(a.signer, {a.payload}));
    return Term::list(items);
}

History decode_history(const Term& list) {
    History h;
    Term t = list;
    while (t.is_cons()) {
        const Term& e = t.arg(0);
        if (!e.is_compound() || e.arity() != 1) throw std::runtime_error("not an encoded act: " + render(e));
        h.push_back(act_of(e.text(), e.arg(0), h));
        t = t.arg(1);
    }
    if (!t.is_nil()) throw std::runtime_error("not an encoded history: " + render(list));
    return h;
}

std::string ledger_label(const ScLedger& l) {
    std::string s;
    for (const auto& [v, h] : l) s += v + "=" + render(encode_history(h)) + ";";
    return s;
}

SocialContract generate_sc(std::vector<std::string> agents, const OutputPolicy& outputs, std::size_t cap) {
    SocialContract sc;
    sc.agents = std::move(agents);
    std::set<std::string> seen;
    std::deque<ScLedger> todo{sc.initial()};
    seen.insert(ledger_label(todo.front()));
    while (!todo.empty()) {
        ScLedger l = std::move(todo.front());
        todo.pop_front();
        for (const auto& v : sc.agents) {
            std::vector<Act> acts;
            for (const auto& a : outputs(v, l.at(v))) acts.push_back(act_of(v, a, l.at(v)));
            for (const auto& u : sc.agents)
                if (u != v)
                    if (auto m = next_input(l, v, u)) acts.push_back(*m);
            for (auto& m : acts) {
                ScTransition t{l, v, std::move(m)};
                ScLedger next = t.after();
                sc.transitions.push_back(std::move(t));
                if (sc.transitions.size() > cap)
                    throw NotAValidSC("more than " + std::to_string(cap) + " transitions; the contract is not finite enough");
                if (seen.insert(ledger_label(next)).second) todo.push_back(std::move(next));
            }
        }
    }
    return sc;
}

void validate_sc(const SocialContract& sc) {
    std::set<std::string> agents(sc.agents.begin(), sc.agents.end());
    using Key = std::tuple<std::string, std::string, std::string>;  // before label, agent, act
    std::set<Key> listed;
    std::map<std::string, std::vector<const ScTransition*>> from;
    for (std::size_t i = 0; i < sc.transitions.size(); ++i) {
        const ScTransition& t = sc.transitions[i];
        std::string where = "transition " + std::to_string(i + 1) + " (" + t.agent + " takes " + act_key(t.act) + ")";
        if (!agents.count(t.agent) || !agents.count(t.act.signer)) throw NotAValidSC(where + " names an unknown agent");
        for (const auto& [a, _] : t.before)
            if (!agents.count(a)) throw NotAValidSC(where + " has a ledger entry for unknown agent " + a);
        for (const auto& a : sc.agents)
            if (!t.before.count(a)) throw NotAValidSC(where + " has no history for " + a);
        if (t.act.seq != count_signed(t.before.at(t.agent), t.act.signer) + 1)
            throw NotAValidSC(where + " carries seq " + std::to_string(t.act.seq) + " out of place");
        if (!t.output()) {
            ScLedger after = t.after();
            if (!is_prefix(restrict(after.at(t.agent), t.act.signer), restrict(t.before.at(t.act.signer), t.act.signer)))
                throw NotAValidSC(where + " is not sound: " + t.act.signer + " has not emitted it");
        }
        std::string label = ledger_label(t.before);
        listed.insert({label, t.agent, act_key(t.act)});
        from[label].push_back(&t);
    }

    // Reachable ledgers.
    std::map<std::string, ScLedger> reach;
    std::deque<ScLedger> todo{sc.initial()};
    reach[ledger_label(todo.front())] = todo.front();
    while (!todo.empty()) {
        ScLedger l = std::move(todo.front());
        todo.pop_front();
        for (const ScTransition* t : from[ledger_label(l)]) {
            ScLedger n = t->after();
            std::string k = ledger_label(n);
            if (!reach.count(k)) {
                reach[k] = n;
                todo.push_back(std::move(n));
            }
        }
    }

    // Output closure: an output depends on the agent's own history alone.
    std::map<std::pair<std::string, std::string>, std::set<std::string>> outputs;  // (agent, own history) -> acts
    for (const auto& t : sc.transitions)
        if (t.output() && reach.count(ledger_label(t.before)))
            outputs[{t.agent, render(encode_history(t.before.at(t.agent)))}].insert(render(t.act.payload));
    for (const auto& [label, l] : reach) {
        for (const auto& v : sc.agents) {
            auto it = outputs.find({v, render(encode_history(l.at(v)))});
            if (it == outputs.end()) continue;
            for (const auto& payload : it->second)
                if (!listed.count({label, v, v + "(" + payload + ")"}))
                    throw NotAValidSC("not output-closed: " + v + " may emit " + payload + " with history " +
                                      render(encode_history(l.at(v))) + " but not in ledger " + label);
        }
        // Input closure.
        for (const auto& v : sc.agents)
            for (const auto& u : sc.agents)
                if (u != v)
                    if (auto m = next_input(l, v, u); m && !listed.count({label, v, act_key(*m)}))
                        throw NotAValidSC("not input-closed: " + v + " cannot take " + act_key(*m) + " in ledger " +
                                          label);
    }
}

CheckedProgram atod_compile(const SocialContract& sc) {
    validate_sc(sc);
    Program p;
    p.source_name = "<atod>";
    for (const auto& v : sc.agents)
        p.activation.emplace_back(v, Term::compound("hist", {Term::name(v), Term::nil()}));
    RoleProgram role;
    role.name = "hist";
    std::set<std::tuple<std::string, std::string, std::string>> done;
    for (const auto& t : sc.transitions) {
        const History& own = t.before.at(t.agent);
        Term pre_list = encode_history(own);
        if (!done.insert({t.agent, render(pre_list), act_key(t.act)}).second) continue;
        History post = own;
        post.push_back(t.act);
        Rule r;
        r.pre = Term::compound("hist", {Term::name(t.agent), pre_list});
        r.post = Term::compound("hist", {Term::name(t.agent), encode_history(post)});
        if (t.output()) r.output = t.act.payload;
        else r.input = ActPattern::by_name(t.act.signer, t.act.payload);
        r.origin = {1, 1};
        role.rules.push_back(std::move(r));
    }
    p.roles.push_back(std::move(role));  // kept even when empty: activation names it
    CheckedProgram cp = check_program(p);
    if (!cp.clean()) throw NotAValidSC("compiled program fails the static check: " + cp.diagnostics.front().message);
    return cp;
}

FiniteTS sc_system(const SocialContract& sc) {
    FiniteTS ts;
    ts.initial = ledger_label(sc.initial());
    std::map<std::string, std::vector<const ScTransition*>> from;
    for (const auto& t : sc.transitions) from[ledger_label(t.before)].push_back(&t);
    std::deque<std::string> todo{ts.initial};
    ts.states.insert(ts.initial);
    while (!todo.empty()) {
        std::string s = todo.front();
        todo.pop_front();
        for (const ScTransition* t : from[s]) {
            std::string n = ledger_label(t->after());
            ts.transitions.insert({s, n});
            if (ts.states.insert(n).second) todo.push_back(n);
        }
    }
    return ts;
}

namespace {

std::string config_label(const Configuration& c) {
    std::string s;
    for (const auto& a : c.order) {
        const AgentCell& cell = c.agents.at(a);
        s += a + (cell.stopped ? "!" : "=") + render(cell.state) + ";";
    }
    for (const auto& [key, q] : c.store) {
        if (q.empty()) continue;
        s += "|" + key.first + ">" + key.second + ":";
        for (const auto& e : q) s += render(e.act.payload) + ",";
    }
    return s;
}

}  // namespace

Exploration explore(const Contract& contract, const std::function<std::string(const Configuration&)>& project,
                    std::size_t cap) {
    Exploration ex;
    Configuration c0 = activate(contract);
    ex.ts.initial = config_label(c0);
    ex.ts.states.insert(ex.ts.initial);
    ex.mapping[ex.ts.initial] = project(c0);
    std::deque<Configuration> todo{std::move(c0)};
    while (!todo.empty()) {
        Configuration c = std::move(todo.front());
        todo.pop_front();
        std::string from = config_label(c);
        for (auto& n : successors(contract, c)) {
            std::string to = config_label(n);
            ex.ts.transitions.insert({from, to});
            if (ex.ts.states.insert(to).second) {
                if (ex.ts.states.size() > cap)
                    throw std::runtime_error("exploration passed " + std::to_string(cap) + " configurations");
                ex.mapping[to] = project(n);
                todo.push_back(std::move(n));
            }
        }
    }
    return ex;
}

std::string drop_store(const Configuration& c) {
    ScLedger l;
    for (const auto& a : c.order) {
        const Term& s = c.agents.at(a).state;
        if (!(s.is_compound() && s.text() == "hist" && s.arity() == 2))
            throw std::runtime_error(a + " is not in a history state: " + render(s));
        l[a] = decode_history(s.arg(1));
    }
    return ledger_label(l);
}

std::optional<CounterExample> check_implementation(const FiniteTS& impl, const FiniteTS& spec,
                                                   const std::map<std::string, std::string>& f, bool strict) {
    for (const auto& s : impl.states) {
        auto it = f.find(s);
        if (it == f.end()) return CounterExample{"mapping", s, "", "mapping is not defined on " + s};
        if (!spec.states.count(it->second))
            return CounterExample{"mapping", s, it->second, s + " maps outside the abstract contract states"};
    }
    if (!f.count(impl.initial) || f.at(impl.initial) != spec.initial)
        return CounterExample{"mapping", impl.initial, spec.initial, "initial state does not map to initial state"};

    std::map<std::string, std::vector<std::string>> pre;  // spec state -> impl states
    for (const auto& s : impl.states) pre[f.at(s)].push_back(s);

    // Every impl step is a spec step (or stutters, when not strict).
    for (const auto& [a, b] : impl.transitions) {
        const std::string &fa = f.at(a), &fb = f.at(b);
        if (fa == fb && !strict) continue;
        if (!spec.transitions.count({fa, fb}))
            return CounterExample{strict ? "morphism" : "condition 2", a, b,
                                  "impl step maps to " + fa + " -> " + fb + " which the abstract contract lacks"};
    }

    if (strict) {
        for (const auto& [a, b] : spec.transitions) {
            auto pa = pre.find(a), pb = pre.find(b);
            if (pa == pre.end() || pb == pre.end())
                return CounterExample{"strict", a, b, "abstract step has no preimage"};
            for (const auto& s : pa->second)
                for (const auto& t : pb->second)
                    if (!impl.transitions.count({s, t}))
                        return CounterExample{"strict", s, t, "images are adjacent but the impl step is missing"};
        }
        return std::nullopt;
    }

    // Every spec step is covered by some impl path of one or more steps.
    std::map<std::string, std::vector<std::string>> next;
    for (const auto& [a, b] : impl.transitions) next[a].push_back(b);
    for (const auto& [a, b] : spec.transitions) {
        auto pa = pre.find(a);
        if (pa == pre.end()) return CounterExample{"condition 1", a, b, "abstract state has no preimage"};
        std::set<std::string> seen;
        std::deque<std::string> todo;
        for (const auto& s : pa->second)
            for (const auto& n : next[s])
                if (seen.insert(n).second) todo.push_back(n);
        bool found = false;
        while (!todo.empty() && !found) {
            std::string s = todo.front();
            todo.pop_front();
            if (f.at(s) == b) {
                found = true;
                break;
            }
            for (const auto& n : next[s])
                if (seen.insert(n).second) todo.push_back(n);
        }
        if (!found) return CounterExample{"condition 1", a, b, "no impl path realises the abstract step"};
    }
    return std::nullopt;
}

}  // namespace scpl
