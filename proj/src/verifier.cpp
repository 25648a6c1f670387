#include "scpl/verifier.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace scpl {

History restrict(const History& h, const std::string& u) {
    History out;
    for (const auto& a : h)
        if (a.signer == u) out.push_back(a);
    return out;
}

std::uint64_t Ledger::offset(const std::string& viewer, const std::string& signer) const {
    auto v = joined.find(viewer);
    if (v == joined.end()) return 0;
    auto s = v->second.find(signer);
    return s == v->second.end() ? 0 : s->second;
}

Ledger ledger_of(const Configuration& c) {
    Ledger l;
    l.agents = c.order;
    for (const auto& a : c.order) {
        const AgentCell& cell = c.agents.at(a);
        l.views[a] = cell.history;
        if (!cell.joined.empty()) l.joined[a] = cell.joined;
    }
    return l;
}

std::map<std::string, History> diagonal(const Ledger& l) {
    std::map<std::string, History> d;
    for (const auto& a : l.agents) {
        auto it = l.views.find(a);
        d[a] = it == l.views.end() ? History{} : restrict(it->second, a);
    }
    return d;
}

namespace {

// Views by pointer so that live configurations need no copies.
struct ViewSet {
    std::vector<std::string> agents;
    std::map<std::string, const History*> views;
    std::function<std::uint64_t(const std::string&, const std::string&)> offset;
};

ViewSet views_of(const Ledger& l) {
    ViewSet s;
    s.agents = l.agents;
    for (const auto& a : l.agents) {
        auto it = l.views.find(a);
        static const History empty;
        s.views[a] = it == l.views.end() ? &empty : &it->second;
    }
    s.offset = [&l](const std::string& v, const std::string& u) { return l.offset(v, u); };
    return s;
}

ViewSet views_of(const Configuration& c) {
    ViewSet s;
    s.agents = c.order;
    for (const auto& a : c.order) s.views[a] = &c.agents.at(a).history;
    s.offset = [&c](const std::string& v, const std::string& u) -> std::uint64_t {
        const auto& j = c.agents.at(v).joined;
        auto it = j.find(u);
        return it == j.end() ? 0 : it->second;
    };
    return s;
}

std::map<std::string, std::vector<const Act*>> split(const History& h) {
    std::map<std::string, std::vector<const Act*>> out;
    for (const auto& a : h) out[a.signer].push_back(&a);
    return out;
}

std::optional<SoundnessViolation> sound(const ViewSet& s) {
    std::map<std::string, std::vector<const Act*>> diag;
    for (const auto& a : s.agents) {
        auto& d = diag[a];
        for (const auto& act : *s.views.at(a))
            if (act.signer == a) d.push_back(&act);
    }
    for (const auto& v : s.agents) {
        for (const auto& [u, view] : split(*s.views.at(v))) {
            if (u == v) continue;
            auto d = diag.find(u);
            std::size_t off = s.offset(v, u);
            for (std::size_t i = 0; i < view.size(); ++i) {
                std::size_t at = off + i;
                if (d == diag.end() || at >= d->second.size()) {
                    return SoundnessViolation{v, u, i,
                                              v + " holds " + render(*view[i]) + " beyond what " + u + " has emitted"};
                }
                if (!(*view[i] == *d->second[at])) {
                    return SoundnessViolation{v, u, i,
                                              v + " holds " + render(*view[i]) + " where " + u + " emitted " +
                                                  render(*d->second[at])};
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<SoundnessViolation> check_sound(const Ledger& l) { return sound(views_of(l)); }
std::optional<SoundnessViolation> check_sound(const Configuration& c) { return sound(views_of(c)); }

namespace {

bool consistent_views(const std::map<std::string, std::vector<const Act*>>& a,
                      const std::map<std::string, std::vector<const Act*>>& b) {
    for (const auto& [u, x] : a) {
        auto it = b.find(u);
        if (it == b.end() || x.empty() || it->second.empty()) continue;
        const auto& y = it->second;
        // Align on the first act of each by seq.
        long long shift = static_cast<long long>(x.front()->seq) - static_cast<long long>(y.front()->seq);
        for (std::size_t i = 0; i < x.size(); ++i) {
            long long j = static_cast<long long>(i) + shift;
            if (j < 0) continue;
            if (j >= static_cast<long long>(y.size())) break;
            if (!(*x[i] == *y[static_cast<std::size_t>(j)])) return false;
        }
    }
    return true;
}

}  // namespace

bool check_consistent(const History& h1, const History& h2) { return consistent_views(split(h1), split(h2)); }

std::optional<std::pair<std::string, std::string>> check_all_consistent(const Configuration& c) {
    std::vector<std::map<std::string, std::vector<const Act*>>> parts;
    for (const auto& a : c.order) parts.push_back(split(c.agents.at(a).history));
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j)
            if (!consistent_views(parts[i], parts[j])) return std::make_pair(c.order[i], c.order[j]);
    return std::nullopt;
}

std::optional<std::string> check_store_invariant(const Configuration& c) {
    for (const auto& [key, q] : c.store) {
        if (!c.has(key.first) || !c.has(key.second)) return "store queue for unknown agent " + key.first + "->" + key.second;
        if (key.first == key.second) return "store queue from " + key.first + " to itself";
        if (q.empty()) return "empty store queue kept for " + key.first + "->" + key.second;
    }
    std::map<std::string, History> diag;
    for (const auto& a : c.order) diag[a] = restrict(c.agents.at(a).history, a);
    for (const auto& v : c.order) {
        const AgentCell& cell = c.agents.at(v);
        std::map<std::string, std::size_t> received;
        for (const auto& act : cell.history)
            if (act.signer != v) ++received[act.signer];
        for (const auto& u : c.order) {
            if (u == v) continue;
            auto it = c.store.find({u, v});
            std::size_t have = it == c.store.end() ? 0 : it->second.size();
            if (cell.stopped) {
                if (have) return "store holds " + std::to_string(have) + " acts for stopped " + v;
                continue;
            }
            auto j = cell.joined.find(u);
            std::size_t from = (j == cell.joined.end() ? 0 : j->second) + received[u];
            const History& d = diag[u];
            std::size_t want = from <= d.size() ? d.size() - from : 0;
            if (have != want)
                return "store " + u + "->" + v + " holds " + std::to_string(have) + " acts, expected " +
                       std::to_string(want);
            for (std::size_t i = 0; i < have; ++i)
                if (!(it->second[i].act == d[from + i]))
                    return "store " + u + "->" + v + " position " + std::to_string(i) + " holds " +
                           render(it->second[i].act) + ", expected " + render(d[from + i]);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- replay

Term replay_state(const History& h, const Contract& contract, const std::string& agent, const Term& initial,
                  std::size_t cap) {
    Term state = initial;
    auto settle = [&](Term s) { return is_stop(s) ? s : contract.silent_closure(s, agent, cap); };
    state = settle(state);
    for (std::size_t i = 0; i < h.size(); ++i) {
        const Act& act = h[i];
        if (is_stop(state)) throw ReplayDivergence(agent + " experiences " + render(act) + " after stopping");
        if (act.signer == agent) {
            std::optional<Term> next;
            if (i + 1 < h.size() && h[i + 1].signer == agent) next = h[i + 1].payload;
            auto steps = contract.explain_output(state, agent, act.payload, next);
            if (steps.empty())
                throw ReplayDivergence("no rule of " + agent + " in " + render(state) + " emits " + render(act.payload));
            for (const auto& g : steps)
                if (g.post != steps[0].post)
                    throw ReplayDivergence(agent + " in " + render(state) + " emits " + render(act.payload) +
                                           " under rules with different posts");
            const GroundStep& g = steps[0];
            if (g.rule->output && g.rule->spawn) ++i;
            state = settle(g.post);
        } else {
            std::optional<Term> post;
            try {
                post = contract.apply_input(state, agent, act.signer, act.payload);
            } catch (const ContractFault& e) {
                throw ReplayDivergence(e.what());
            }
            if (post) state = settle(*post);
        }
    }
    return state;
}

std::map<std::string, Term> initial_states(const Ledger& l, const Program& p) {
    std::map<std::string, Term> out;
    for (const auto& [a, s] : p.activation) out[a] = s;
    for (const auto& [u, d] : diagonal(l))
        for (const auto& act : d)
            if (act.payload.is_compound() && act.payload.text() == "activated" && act.payload.arity() == 2 &&
                act.payload.arg(0).is_name() && !out.count(act.payload.arg(0).text()))
                out[act.payload.arg(0).text()] = act.payload.arg(1);
    return out;
}

Decimal balance_of(const History& h, const std::string& u, const Decimal& c, const BalanceModel& m) {
    Decimal bal = c;
    std::size_t arity = m.kind == BalanceModel::Kind::Unit ? 1 : 2;
    for (const auto& a : h) {
        const Term& p = a.payload;
        if (!m.tick_signer.empty() && a.signer == m.tick_signer && p.is_name() && p.text() == "tick") {
            bal = bal + 1;
            continue;
        }
        if (!p.is_compound() || p.text() != "pay" || p.arity() != arity) continue;
        Decimal amount = 1;
        if (arity == 2) {
            if (!p.arg(1).is_number()) continue;
            amount = p.arg(1).value();
        }
        if (p.arg(0).is_name() && p.arg(0).text() == u) bal = bal + amount;
        if (a.signer == u) bal = bal - amount;
    }
    return bal;
}

// ---------------------------------------------------------------- trace verification

bool VerifyReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok; });
}

std::string VerifyReport::text() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.ok ? "pass " : "FAIL ") << c.name;
        if (!c.detail.empty()) os << ": " << c.detail;
        os << '\n';
    }
    return os.str();
}

std::string VerifyReport::json() const {
    nlohmann::ordered_json j;
    j["ok"] = ok();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    return j.dump();
}

namespace {

int kind_rank(TraceEvent::Kind k) {
    switch (k) {
        case TraceEvent::Kind::Oracle: return 0;
        case TraceEvent::Kind::Recv: return 1;
        case TraceEvent::Kind::Act: return 2;
        case TraceEvent::Kind::Stop: return 3;
        case TraceEvent::Kind::Final: return 4;
    }
    return 5;
}

struct Currency {
    BalanceModel model;
    Decimal endowment;
};

// A contract is treated as a currency when role `agent` settles into
// agent(N) and some output pays.
std::optional<Currency> currency_of(const Contract& k) {
    const Program& p = k.program();
    if (!p.role("agent")) return std::nullopt;
    Currency cur;
    bool pays = false;
    for (const auto& role : p.roles) {
        for (const auto& r : role.rules) {
            if (r.output && r.output->is_compound() && r.output->text() == "pay" &&
                (r.output->arity() == 1 || r.output->arity() == 2)) {
                pays = true;
                if (r.output->arity() == 2) cur.model.kind = BalanceModel::Kind::Amount;
            }
            if (r.input && r.input->signer_kind == ActPattern::Signer::Name && r.input->payload.is_name() &&
                r.input->payload.text() == "tick")
                cur.model.tick_signer = r.input->signer;
        }
    }
    if (!pays) return std::nullopt;
    Term init;
    try {
        init = k.silent_closure(Term::name("agent"), "$probe");
    } catch (const ContractFault&) {
        return std::nullopt;
    }
    if (!(init.is_compound() && init.text() == "agent" && init.arity() == 1 && init.arg(0).is_number()))
        return std::nullopt;
    cur.endowment = init.arg(0).value();
    return cur;
}

}  // namespace

VerifyReport verify_trace(const Contract& contract, const std::vector<TraceEvent>& events) {
    VerifyReport report;
    CheckResult structure{"structure", true, {}}, fifo{"fifo", true, {}}, soundness{"soundness", true, {}},
        consistency{"consistency", true, {}}, store{"store", true, {}}, replay{"replay", true, {}};
    auto fail = [](CheckResult& c, std::size_t line, const std::string& why) {
        if (!c.ok) return;
        c.ok = false;
        c.detail = "record " + std::to_string(line) + ": " + why;
    };

    // Structure: contiguous steps, kinds in order within a step, contiguous indices.
    std::uint64_t step = 0, index = 0;
    int last_rank = -1;
    bool finals = false;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const TraceEvent& e = events[i];
        std::size_t line = i + 1;
        if (finals && e.kind != TraceEvent::Kind::Final) fail(structure, line, "record after the final states");
        if (e.kind == TraceEvent::Kind::Final) {
            finals = true;
            if (e.step != step) fail(structure, line, "final record at step " + std::to_string(e.step));
            continue;
        }
        if (e.step == step) {
            if (kind_rank(e.kind) < last_rank) fail(structure, line, "records of step " + std::to_string(step) + " out of order");
        } else if (e.step == step + 1) {
            step = e.step;
        } else {
            fail(structure, line, "step " + std::to_string(e.step) + " follows step " + std::to_string(step));
            step = e.step;
        }
        last_rank = kind_rank(e.kind);
        if (e.kind == TraceEvent::Kind::Oracle || e.kind == TraceEvent::Kind::Act) {
            if (e.index != index + 1)
                fail(structure, line, "index " + std::to_string(e.index) + " follows " + std::to_string(index));
            index = e.index;
        }
    }
    if (!finals) fail(structure, events.size(), "no final states");

    // Rebuild the configuration (histories, joins, store) from the records.
    Configuration c;
    for (const auto& [a, s] : contract.program().activation) {
        AgentCell cell;
        cell.name = a;
        cell.state = s;
        c.order.push_back(a);
        c.agents.emplace(a, std::move(cell));
    }
    std::map<std::string, Term> initial;
    for (const auto& [a, s] : contract.program().activation) initial[a] = s;
    std::map<std::string, TraceEvent> final_states;
    std::set<std::string> stop_records;

    auto check_step = [&](std::size_t line) {
        if (soundness.ok)
            if (auto v = check_sound(c)) fail(soundness, line, v->message);
        if (consistency.ok)
            if (auto p = check_all_consistent(c)) fail(consistency, line, p->first + " and " + p->second + " disagree");
        if (store.ok)
            if (auto s = check_store_invariant(c)) fail(store, line, *s);
    };

    std::uint64_t current = events.empty() ? 0 : events.front().step;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const TraceEvent& e = events[i];
        std::size_t line = i + 1;
        if (e.step != current) {
            check_step(line - 1);
            current = e.step;
        }
        switch (e.kind) {
            case TraceEvent::Kind::Oracle:
                if (!c.has(e.agent)) fail(structure, line, "oracle record for unknown agent " + e.agent);
                break;
            case TraceEvent::Kind::Act: {
                if (!c.has(e.agent) || c.cell(e.agent).stopped) {
                    fail(structure, line, "act by absent or stopped agent " + e.agent);
                    break;
                }
                AgentCell& cell = c.cell(e.agent);
                if (e.seq != cell.out_seq + 1)
                    fail(fifo, line, e.agent + " act seq " + std::to_string(e.seq) + " follows " +
                                         std::to_string(cell.out_seq));
                cell.out_seq = e.seq;
                Act act{e.agent, e.payload, e.seq};
                cell.history.push_back(act);
                std::vector<std::string> expect;
                for (const auto& u : c.order)
                    if (u != e.agent && !c.agents.at(u).stopped) expect.push_back(u);
                if (e.recipients != expect) fail(store, line, "recipients differ from the live agents");
                for (const auto& u : e.recipients)
                    if (c.has(u) && u != e.agent) c.store[{e.agent, u}].push_back({act, 0});
                if (e.spawn) {
                    if (c.has(e.spawn->agent)) {
                        fail(structure, line, "spawn of existing agent " + e.spawn->agent);
                        break;
                    }
                    if (e.payload != activated_act(Term::name(e.spawn->agent), e.spawn->state))
                        fail(structure, line, "spawn record does not match its act");
                    AgentCell fresh;
                    fresh.name = e.spawn->agent;
                    fresh.state = e.spawn->state;
                    fresh.autonomous = e.spawn->autonomous;
                    for (const auto& u : c.order) fresh.joined[u] = c.agents.at(u).out_seq;
                    c.order.push_back(fresh.name);
                    initial[fresh.name] = e.spawn->state;
                    c.agents.emplace(fresh.name, std::move(fresh));
                }
                break;
            }
            case TraceEvent::Kind::Recv: {
                if (!c.has(e.agent) || c.cell(e.agent).stopped) {
                    fail(structure, line, "receipt by absent or stopped agent " + e.agent);
                    break;
                }
                auto q = c.store.find({e.from, e.agent});
                if (q == c.store.end() || q->second.empty()) {
                    fail(fifo, line, e.agent + " receives from " + e.from + " with nothing in transit");
                    c.cell(e.agent).history.push_back({e.from, e.payload, e.seq});
                    break;
                }
                Act head = q->second.front().act;
                q->second.pop_front();
                if (q->second.empty()) c.store.erase(q);
                if (head.seq != e.seq || head.payload != e.payload)
                    fail(fifo, line, e.agent + " receives " + e.from + " seq " + std::to_string(e.seq) +
                                         " but the next in transit is seq " + std::to_string(head.seq));
                c.cell(e.agent).history.push_back({e.from, e.payload, e.seq});
                break;
            }
            case TraceEvent::Kind::Stop: {
                if (!c.has(e.agent)) {
                    fail(structure, line, "stop of unknown agent " + e.agent);
                    break;
                }
                AgentCell& cell = c.cell(e.agent);
                cell.stopped = true;
                stop_records.insert(e.agent);
                for (auto it = c.store.begin(); it != c.store.end();)
                    it = it->first.second == e.agent ? c.store.erase(it) : std::next(it);
                break;
            }
            case TraceEvent::Kind::Final:
                if (final_states.count(e.agent)) fail(structure, line, "second final record for " + e.agent);
                final_states[e.agent] = e;
                break;
        }
    }
    check_step(events.size());

    for (const auto& a : c.order) {
        auto f = final_states.find(a);
        if (f == final_states.end()) {
            fail(replay, events.size(), "no final state for " + a);
            continue;
        }
        if (c.cell(a).history.size() != f->second.history)
            fail(structure, events.size(),
                 a + " ends with " + std::to_string(f->second.history) + " acts in its history but the records give " +
                     std::to_string(c.cell(a).history.size()));
        try {
            Term s = replay_state(c.cell(a).history, contract, a, initial.at(a));
            if (s != f->second.state)
                fail(replay, events.size(), a + " replays to " + render(s) + " but ends in " + render(f->second.state));
            if (is_stop(s) != (stop_records.count(a) != 0) || is_stop(s) != f->second.stopped)
                fail(replay, events.size(), a + " stop records disagree with its replayed state");
        } catch (const ReplayDivergence& e) {
            fail(replay, events.size(), e.what());
        }
    }
    for (const auto& [a, _] : final_states)
        if (!c.has(a)) fail(structure, events.size(), "final state for unknown agent " + a);

    report.checks = {structure, fifo, soundness, consistency, store, replay};
    if (auto cur = currency_of(contract)) {
        CheckResult bal{"balance", true, {}};
        for (const auto& a : c.order) {
            auto f = final_states.find(a);
            if (f == final_states.end()) continue;
            const Term& s = f->second.state;
            if (!(s.is_compound() && s.text() == "agent" && s.arity() == 1 && s.arg(0).is_number())) continue;
            Decimal b = balance_of(c.cell(a).history, a, cur->endowment, cur->model);
            if (b != s.arg(0).value())
                fail(bal, events.size(), a + " holds " + s.arg(0).value().str() + " but its history gives " + b.str());
        }
        report.checks.push_back(bal);
    }
    return report;
}

}  // namespace scpl
