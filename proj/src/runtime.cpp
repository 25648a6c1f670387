#include "scpl/runtime.hpp"

#include <algorithm>
#include <limits>

namespace scpl {

const char* to_string(TraceEvent::Kind k) {
    switch (k) {
        case TraceEvent::Kind::Oracle: return "oracle";
        case TraceEvent::Kind::Act: return "act";
        case TraceEvent::Kind::Recv: return "recv";
        case TraceEvent::Kind::Stop: return "stop";
        case TraceEvent::Kind::Final: return "final";
    }
    return "?";
}

const AgentCell& Configuration::cell(const std::string& agent) const {
    auto it = agents.find(agent);
    if (it == agents.end()) throw NotEnabled("no agent " + agent);
    return it->second;
}

AgentCell& Configuration::cell(const std::string& agent) {
    auto it = agents.find(agent);
    if (it == agents.end()) throw NotEnabled("no agent " + agent);
    return it->second;
}

std::vector<std::string> Configuration::live() const {
    std::vector<std::string> out;
    for (const auto& a : order)
        if (!agents.at(a).stopped) out.push_back(a);
    return out;
}

// ---------------------------------------------------------------- transitions

namespace {

void stop_agent(Configuration& c, AgentCell& cell, std::vector<TraceEvent>* events) {
    cell.stopped = true;
    cell.state = Term::name("stop");
    for (auto it = c.store.begin(); it != c.store.end();) {
        if (it->first.second == cell.name) it = c.store.erase(it);
        else ++it;
    }
    if (events) {
        TraceEvent e;
        e.kind = TraceEvent::Kind::Stop;
        e.step = c.step;
        e.agent = cell.name;
        events->push_back(std::move(e));
    }
}

// New state plus silent closure; handles `stop`.
void settle(const Contract& contract, Configuration& c, AgentCell& cell, Term state,
            std::vector<TraceEvent>* events, std::size_t cap) {
    if (!is_stop(state)) state = contract.silent_closure(state, cell.name, cap);
    if (is_stop(state)) {
        stop_agent(c, cell, events);
        return;
    }
    cell.state = std::move(state);
}

void emit(Configuration& c, AgentCell& cell, const Term& payload, std::optional<SpawnInfo> spawn,
          std::vector<TraceEvent>* events) {
    Act a{cell.name, payload, ++cell.out_seq};
    cell.history.push_back(a);
    std::uint64_t order = ++c.emitted;
    TraceEvent e;
    for (const auto& u : c.order) {
        if (u == cell.name || c.agents.at(u).stopped) continue;
        c.store[{cell.name, u}].push_back({a, order});
        e.recipients.push_back(u);
    }
    ++c.traced;
    if (!events) return;
    e.kind = TraceEvent::Kind::Act;
    e.step = c.step;
    e.index = c.traced;
    e.agent = cell.name;
    e.payload = payload;
    e.seq = a.seq;
    e.spawn = std::move(spawn);
    events->push_back(std::move(e));
}

}  // namespace

Configuration activate(const Contract& contract, std::size_t silent_cap) {
    Configuration c;
    for (const auto& [agent, state] : contract.program().activation) {
        AgentCell cell;
        cell.name = agent;
        cell.state = state;
        c.order.push_back(agent);
        c.agents.emplace(agent, std::move(cell));
    }
    for (const auto& agent : c.order) {
        AgentCell& cell = c.agents.at(agent);
        settle(contract, c, cell, cell.state, nullptr, silent_cap);
    }
    return c;
}

std::vector<Alternative> enabled_outputs(const Contract& contract, const Configuration& c, const std::string& v) {
    const AgentCell& cell = c.cell(v);
    if (cell.stopped) return {};
    return contract.alternatives(cell.state, v);
}

void step_input(const Contract& contract, Configuration& c, const std::string& v, const std::string& sender,
                std::vector<TraceEvent>* events, std::size_t silent_cap) {
    auto it = c.store.find({sender, v});
    if (it == c.store.end() || it->second.empty())
        throw NotEnabled("nothing from " + sender + " waiting for " + v);
    AgentCell& cell = c.cell(v);
    if (cell.stopped) throw NotEnabled(v + " has stopped");
    Envelope env = std::move(it->second.front());
    it->second.pop_front();
    if (it->second.empty()) c.store.erase(it);
    ++c.step;
    cell.history.push_back(env.act);
    if (events) {
        TraceEvent e;
        e.kind = TraceEvent::Kind::Recv;
        e.step = c.step;
        e.agent = v;
        e.from = sender;
        e.seq = env.act.seq;
        e.payload = env.act.payload;
        events->push_back(std::move(e));
    }
    auto post = contract.apply_input(cell.state, v, env.act.signer, env.act.payload);
    if (post) settle(contract, c, cell, *post, events, silent_cap);
}

void step_output(const Contract& contract, Configuration& c, const std::string& v, const GroundStep& g,
                 std::vector<TraceEvent>* events, std::size_t silent_cap) {
    AgentCell* cell = &c.cell(v);
    if (cell->stopped) throw NotEnabled(v + " has stopped");
    if (substitute(g.rule->pre, g.theta) != cell->state)
        throw NotEnabled(v + " is in " + render(cell->state) + ", not " + render(substitute(g.rule->pre, g.theta)));
    std::string spawned;
    if (g.spawn) {
        if (g.spawn->autonomous()) {
            do spawned = "autonomous_" + std::to_string(++c.autonomous_ids);
            while (c.has(spawned));
        } else {
            spawned = g.spawn->name.text();
            if (c.has(spawned)) throw SpawnCollision(v + " cannot spawn " + spawned + ": the name is taken");
        }
    }
    ++c.step;
    if (g.payload) emit(c, *cell, *g.payload, std::nullopt, events);
    if (g.spawn) {
        emit(c, *cell, activated_act(Term::name(spawned), g.spawn->state),
             SpawnInfo{spawned, g.spawn->state, g.spawn->autonomous()}, events);
        AgentCell fresh;
        fresh.name = spawned;
        fresh.state = g.spawn->state;
        fresh.autonomous = g.spawn->autonomous();
        for (const auto& u : c.order) fresh.joined[u] = c.agents.at(u).out_seq;
        c.order.push_back(spawned);
        AgentCell& nc = c.agents.emplace(spawned, std::move(fresh)).first->second;
        settle(contract, c, nc, nc.state, events, silent_cap);
        cell = &c.cell(v);
    }
    settle(contract, c, *cell, g.post, events, silent_cap);
}

std::vector<Configuration> successors(const Contract& contract, const Configuration& c) {
    std::vector<Configuration> out;
    for (const auto& v : c.order) {
        if (c.agents.at(v).stopped) continue;
        for (const auto& [key, q] : c.store) {
            if (key.second != v || q.empty()) continue;
            Configuration n = c;
            step_input(contract, n, v, key.first);
            out.push_back(std::move(n));
        }
        for (const auto& alt : enabled_outputs(contract, c, v)) {
            if (!alt.required_vars.empty()) continue;
            std::vector<Substitution> options;
            if (alt.choice_var.empty()) options.push_back({});
            for (const auto& o : alt.choice_options) options.push_back({{alt.choice_var, o}});
            for (const auto& b : options) {
                auto g = contract.bind(alt, b);
                if (!g) continue;
                Configuration n = c;
                step_output(contract, n, v, *g);
                out.push_back(std::move(n));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- engine

Engine::Engine(Contract contract, RunOptions opts, Oracle* oracle)
    : contract_(std::move(contract)), opts_(std::move(opts)), oracle_(oracle), rng_(opts_.seed) {
    c_ = activate(contract_, opts_.silent_cap);
}

std::string Engine::Triple::key() const {
    return agent + (kind == TripleKind::Input ? "<" + sender : ">");
}

std::size_t Engine::rank(const std::string& agent) const {
    auto it = std::find(opts_.priority.begin(), opts_.priority.end(), agent);
    if (it != opts_.priority.end()) return static_cast<std::size_t>(it - opts_.priority.begin());
    return opts_.priority.size();
}

std::vector<std::string> Engine::by_rank(std::vector<std::string> agents) const {
    std::stable_sort(agents.begin(), agents.end(), [&](const std::string& a, const std::string& b) {
        auto ra = rank(a), rb = rank(b);
        return ra != rb ? ra < rb : a < b;
    });
    return agents;
}

OracleRequest Engine::make_request(const std::string& agent, std::vector<Alternative> alts) {
    OracleRequest req;
    req.request_id = ++next_request_;
    req.agent = agent;
    req.state = c_.cell(agent).state;
    auto list = std::make_shared<const std::vector<Alternative>>(std::move(alts));
    req.alternatives = *list;
    Contract contract = contract_;
    req.try_bind = [contract, list](std::size_t i, const Substitution& b, std::string* why) -> std::optional<GroundStep> {
        if (i >= list->size()) {
            if (why) *why = "no alternative " + std::to_string(i);
            return std::nullopt;
        }
        return contract.bind((*list)[i], b, why);
    };
    return req;
}

std::optional<GroundStep> Engine::forced(const std::string&, const std::vector<Alternative>& alts) const {
    if (alts.size() != 1 || !alts[0].reactive() || !alts[0].ground()) return std::nullopt;
    return contract_.bind(alts[0], {});
}

void Engine::record_oracle(const std::string& agent, const GroundStep& g, std::uint64_t step) {
    TraceEvent e;
    e.kind = TraceEvent::Kind::Oracle;
    e.step = step;
    e.index = ++c_.traced;
    e.agent = agent;
    e.payload = g.payload ? *g.payload : activated_act(g.spawn->name, g.spawn->state);
    std::size_t from = trace_.size();
    trace_.push_back(std::move(e));
    publish(from);
}

void Engine::publish(std::size_t from) {
    for (std::size_t i = from; i < trace_.size(); ++i)
        for (const auto& f : listeners_) f(trace_[i]);
}

void Engine::do_input(const std::string& agent, const std::string& sender) {
    Term before = c_.cell(agent).state;
    std::size_t from = trace_.size();
    step_input(contract_, c_, agent, sender, &trace_, opts_.silent_cap);
    if (c_.cell(agent).state != before) {
        passed_.erase(agent);
        pending_.erase(agent);
    }
    publish(from);
}

void Engine::do_output(const std::string& agent, const GroundStep& g) {
    std::size_t from = trace_.size();
    step_output(contract_, c_, agent, g, &trace_, opts_.silent_cap);
    passed_.erase(agent);
    pending_.erase(agent);
    publish(from);
}

bool Engine::step() {
    return opts_.scheduler == SchedulerKind::Canonical ? step_canonical() : step_random();
}

Halt Engine::run(std::uint64_t max_steps) {
    while (c_.step < max_steps)
        if (!step()) return Halt::Quiescent;
    return Halt::MaxSteps;
}

void Engine::finish() {
    std::size_t from = trace_.size();
    for (const auto& a : c_.order) {
        const AgentCell& cell = c_.agents.at(a);
        TraceEvent e;
        e.kind = TraceEvent::Kind::Final;
        e.step = c_.step;
        e.agent = a;
        e.state = cell.state;
        e.stopped = cell.stopped;
        e.history = cell.history.size();
        trace_.push_back(std::move(e));
    }
    publish(from);
}

bool Engine::step_canonical() {
    // Decisions, in the oracle's order.
    std::vector<std::string> waiting;
    std::map<std::string, std::vector<Alternative>> alts;
    for (const auto& a : by_rank(c_.live())) {
        const AgentCell& cell = c_.cell(a);
        if (cell.autonomous || pending_.count(a) || passed_.count(a)) continue;
        auto list = contract_.alternatives(cell.state, a);
        if (list.empty() || forced(a, list)) continue;
        waiting.push_back(a);
        alts[a] = std::move(list);
    }
    if (oracle_) {
        for (const auto& a : oracle_->preference(waiting)) {
            OracleRequest req = make_request(a, std::move(alts[a]));
            OracleDecision d = oracle_->decide(req);
            if (d.pass) {
                passed_.insert(a);
                continue;
            }
            std::string why;
            auto g = req.try_bind(d.alternative, d.bindings, &why);
            if (!g) throw InvalidDecision(a + ": " + why);
            ++c_.step;
            record_oracle(a, *g, c_.step);
            pending_[a] = {*g, c_.cell(a).state};
            return true;
        }
    } else {
        for (const auto& a : waiting) passed_.insert(a);
    }

    // Deliveries, oldest act first.
    const std::pair<const std::pair<std::string, std::string>, std::deque<Envelope>>* best = nullptr;
    for (const auto& entry : c_.store) {
        if (entry.second.empty()) continue;
        if (!best) {
            best = &entry;
            continue;
        }
        auto o1 = entry.second.front().order, o2 = best->second.front().order;
        auto r1 = rank(entry.first.second), r2 = rank(best->first.second);
        if (o1 < o2 || (o1 == o2 && (r1 < r2 || (r1 == r2 && entry.first.second < best->first.second))))
            best = &entry;
    }
    if (best) {
        auto key = best->first;
        do_input(key.second, key.first);
        return true;
    }

    // Emissions, by priority.
    for (const auto& a : by_rank(c_.live())) {
        auto p = pending_.find(a);
        if (p != pending_.end()) {
            if (p->second.state == c_.cell(a).state) {
                GroundStep g = p->second.step;
                do_output(a, g);
                return true;
            }
            pending_.erase(p);
        }
        auto list = contract_.alternatives(c_.cell(a).state, a);
        if (list.empty()) continue;
        if (auto g = forced(a, list)) {
            do_output(a, *g);
            return true;
        }
        if (c_.cell(a).autonomous) {
            OracleRequest req = make_request(a, std::move(list));
            OracleDecision d = auto_decide(req);
            if (d.pass) continue;
            auto g = req.try_bind(d.alternative, d.bindings, nullptr);
            do_output(a, *g);
            return true;
        }
    }
    return false;
}

bool Engine::step_random() {
    std::vector<Triple> triples;
    std::map<std::string, std::vector<Alternative>> alts;
    for (const auto& a : c_.order) {
        const AgentCell& cell = c_.agents.at(a);
        if (cell.stopped) continue;
        for (const auto& u : c_.order) {
            auto it = c_.store.find({u, a});
            if (it != c_.store.end() && !it->second.empty()) triples.push_back({a, TripleKind::Input, u});
        }
        auto p = pending_.find(a);
        if (p != pending_.end() && p->second.state != cell.state) pending_.erase(p);
        auto list = contract_.alternatives(cell.state, a);
        bool out = pending_.count(a) ||
                   (!list.empty() && (cell.autonomous || !passed_.count(a) || forced(a, list)));
        if (out) triples.push_back({a, TripleKind::Output, ""});
        alts[a] = std::move(list);
    }

    while (!triples.empty()) {
        std::size_t pick = triples.size();
        if (opts_.fairness > 0) {
            std::size_t oldest = 0;
            for (std::size_t i = 0; i < triples.size(); ++i) {
                auto it = ages_.find(triples[i].key());
                std::size_t age = it == ages_.end() ? 0 : it->second;
                if (age >= opts_.fairness && age > oldest) {
                    oldest = age;
                    pick = i;
                }
            }
        }
        if (pick == triples.size()) pick = std::uniform_int_distribution<std::size_t>(0, triples.size() - 1)(rng_);
        Triple t = triples[pick];
        triples.erase(triples.begin() + static_cast<std::ptrdiff_t>(pick));

        bool acted = false;
        if (t.kind == TripleKind::Input) {
            do_input(t.agent, t.sender);
            acted = true;
        } else if (auto p = pending_.find(t.agent); p != pending_.end()) {
            GroundStep g = p->second.step;
            do_output(t.agent, g);
            acted = true;
        } else {
            auto& list = alts[t.agent];
            if (auto g = forced(t.agent, list)) {
                do_output(t.agent, *g);
                acted = true;
            } else {
                OracleRequest req = make_request(t.agent, list);
                OracleDecision d = c_.cell(t.agent).autonomous
                                       ? auto_decide(req)
                                       : (oracle_ ? oracle_->decide(req) : OracleDecision::pass_turn());
                if (d.pass) {
                    if (!c_.cell(t.agent).autonomous) passed_.insert(t.agent);
                } else {
                    std::string why;
                    auto g = req.try_bind(d.alternative, d.bindings, &why);
                    if (!g) throw InvalidDecision(t.agent + ": " + why);
                    if (!c_.cell(t.agent).autonomous) record_oracle(t.agent, *g, c_.step + 1);
                    do_output(t.agent, *g);
                    acted = true;
                }
            }
        }
        if (!acted) continue;
        if (opts_.fairness > 0) {
            ages_.erase(t.key());
            for (const auto& other : triples) ++ages_[other.key()];
        }
        return true;
    }
    return false;
}

}  // namespace scpl
