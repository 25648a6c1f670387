#include "scpl/oracle.hpp"

#include "scpl/eval.hpp"
#include "scpl/parser.hpp"

#include <json.hpp>

#include <algorithm>

namespace scpl {

OracleDecision auto_decide(const OracleRequest& req) {
    std::vector<OracleDecision> found;
    for (std::size_t i = 0; i < req.alternatives.size(); ++i) {
        const Alternative& alt = req.alternatives[i];
        if (!alt.required_vars.empty())
            throw AutoOracleAmbiguous(req.agent + ": " + render(alt.act_pattern) + " leaves " + alt.required_vars.front() +
                                      " open");
        if (alt.choice_var.empty()) {
            if (req.try_bind(i, {}, nullptr)) found.push_back(OracleDecision::choose(i, {}));
            continue;
        }
        std::vector<Term> seen;
        for (const auto& o : alt.choice_options) {
            if (std::find(seen.begin(), seen.end(), o) != seen.end()) continue;
            seen.push_back(o);
            Substitution b{{alt.choice_var, o}};
            if (req.try_bind(i, b, nullptr)) found.push_back(OracleDecision::choose(i, b));
        }
    }
    if (found.empty()) return OracleDecision::pass_turn();
    if (found.size() > 1)
        throw AutoOracleAmbiguous(req.agent + " in " + render(req.state) + " has " + std::to_string(found.size()) +
                                  " ground choices");
    return found.front();
}

// ---------------------------------------------------------------- scripted

ScriptedOracle ScriptedOracle::from_json(const std::string& text) {
    auto j = nlohmann::ordered_json::parse(text);
    if (!j.is_object()) throw std::runtime_error("oracle script must be a JSON object of agent -> payload list");
    ScriptedOracle o;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_array()) throw std::runtime_error("script entry for " + it.key() + " is not a list");
        if (std::find(o.order_.begin(), o.order_.end(), it.key()) == o.order_.end()) o.order_.push_back(it.key());
        for (const auto& e : it.value()) {
            if (!e.is_string()) throw std::runtime_error("script payloads must be strings");
            o.script_[it.key()].push_back(parse_term(e.get<std::string>()));
        }
    }
    return o;
}

ScriptedOracle ScriptedOracle::from_file(const std::string& path) { return from_json(read_file(path)); }

void ScriptedOracle::append(const std::string& agent, Term entry) {
    if (std::find(order_.begin(), order_.end(), agent) == order_.end()) order_.push_back(agent);
    script_[agent].push_back(std::move(entry));
}

std::size_t ScriptedOracle::remaining(const std::string& agent) const {
    auto it = script_.find(agent);
    return it == script_.end() ? 0 : it->second.size();
}

std::vector<std::string> ScriptedOracle::preference(std::vector<std::string> agents) const {
    std::vector<std::string> out;
    for (const auto& a : order_)
        if (std::find(agents.begin(), agents.end(), a) != agents.end()) out.push_back(a);
    for (const auto& a : agents)
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    return out;
}

OracleDecision ScriptedOracle::decide(const OracleRequest& req) {
    auto it = script_.find(req.agent);
    if (it == script_.end() || it->second.empty()) return OracleDecision::pass_turn();
    const Term& entry = it->second.front();
    FreshNames fresh("_S");
    bool functor_hit = false;
    std::string why;
    for (std::size_t i = 0; i < req.alternatives.size(); ++i) {
        const Alternative& alt = req.alternatives[i];
        const Term& pat = alt.act_pattern;
        if (state_functor(pat) != state_functor(entry) || pat.arity() != entry.arity()) continue;
        functor_hit = true;
        auto theta = unify(pat, rename_fresh(entry, fresh));
        if (!theta) continue;
        Substitution bindings;
        auto take = [&](const std::string& v) {
            auto b = theta->find(v);
            if (b != theta->end() && b->second.ground()) bindings[v] = b->second;
        };
        for (const auto& v : alt.required_vars) take(v);
        if (!alt.choice_var.empty()) take(alt.choice_var);
        if (req.try_bind(i, bindings, &why)) {
            it->second.pop_front();
            return OracleDecision::choose(i, std::move(bindings));
        }
    }
    if (functor_hit)
        throw OracleScriptMismatch(req.agent + ": script entry " + render(entry) + " grounds no offered alternative" +
                                   (why.empty() ? "" : " (" + why + ")"));
    return OracleDecision::pass_turn();
}

// ---------------------------------------------------------------- random

std::set<std::pair<std::string, std::size_t>> agent_positions(const Program& p) {
    std::set<std::pair<std::string, std::size_t>> out;
    for (const auto& role : p.roles) {
        for (const auto& r : role.rules) {
            if (!r.input || !r.input->payload.is_compound()) continue;
            const Term& pl = r.input->payload;
            for (std::size_t i = 0; i < pl.arity(); ++i) {
                const Term& a = pl.arg(i);
                if (!a.is_var()) continue;
                bool signer = r.input->signer_kind == ActPattern::Signer::Var && a.text() == r.input->signer;
                if (a.text() == "Self" || signer)
                    out.insert({pl.text() + "/" + std::to_string(pl.arity()), i});
            }
        }
    }
    return out;
}

RandomOracle::RandomOracle(const Contract& contract, std::uint64_t seed, Options opts)
    : rng_(seed), opts_(opts), agent_positions_(agent_positions(contract.program())) {}

namespace {

bool at_agent_position(const Term& t, const std::string& var,
                       const std::set<std::pair<std::string, std::size_t>>& positions) {
    if (!t.is_compound()) return false;
    std::string key = t.text() + "/" + std::to_string(t.arity());
    for (std::size_t i = 0; i < t.arity(); ++i) {
        if (t.arg(i).is_var() && t.arg(i).text() == var && positions.count({key, i})) return true;
        if (at_agent_position(t.arg(i), var, positions)) return true;
    }
    return false;
}

bool numeric_var(const Rule& r, const std::string& var) {
    for (const auto& c : r.conditions) {
        auto reads = read_vars(c);
        if (std::find(reads.begin(), reads.end(), var) == reads.end()) continue;
        if (const auto* cmp = std::get_if<Compare>(&c); cmp && cmp->op != CmpOp::Eq && cmp->op != CmpOp::Ne)
            return true;
        if (const auto* a = std::get_if<Assign>(&c); a && is_arith_expr(a->expr)) return true;
    }
    return false;
}

}  // namespace

Term RandomOracle::draw(const Alternative& alt, const std::string& var, const std::string& self) {
    std::vector<std::string> names = live_ ? live_() : std::vector<std::string>{};
    const Rule& r = *alt.rule;
    if (r.spawn && r.spawn->name.is_var() && r.spawn->name.text() == var) {
        for (;;) {
            std::string n = "guest" + std::to_string(++fresh_);
            if (std::find(names.begin(), names.end(), n) == names.end()) return Term::name(n);
        }
    }
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); };
    if (at_agent_position(alt.act_pattern, var, agent_positions_)) {
        std::vector<std::string> others;
        for (const auto& n : names)
            if (n != self) others.push_back(n);
        if (!others.empty()) return Term::name(others[pick(others.size())]);
    }
    if (numeric_var(r, var) || names.empty()) return Term::number(static_cast<long long>(pick(4)));
    std::size_t k = pick(4 + names.size());
    if (k < 4) return Term::number(static_cast<long long>(k));
    return Term::name(names[k - 4]);
}

OracleDecision RandomOracle::decide(const OracleRequest& req) {
    if (req.alternatives.empty()) return OracleDecision::pass_turn();
    if (std::uniform_real_distribution<double>(0, 1)(rng_) < opts_.pass_probability) return OracleDecision::pass_turn();
    std::size_t population = live_ ? live_().size() : 0;
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < req.alternatives.size(); ++i)
        if (!req.alternatives[i].rule->spawn || population < opts_.max_agents) usable.push_back(i);
    if (usable.empty()) return OracleDecision::pass_turn();
    for (int attempt = 0; attempt < opts_.attempts; ++attempt) {
        std::size_t i = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng_)];
        const Alternative& alt = req.alternatives[i];
        Substitution b;
        for (const auto& v : alt.required_vars) b[v] = draw(alt, v, req.agent);
        if (!alt.choice_var.empty() && !alt.choice_options.empty())
            b[alt.choice_var] = alt.choice_options[std::uniform_int_distribution<std::size_t>(
                0, alt.choice_options.size() - 1)(rng_)];
        if (req.try_bind(i, b, nullptr)) return OracleDecision::choose(i, std::move(b));
    }
    return OracleDecision::pass_turn();
}

// ---------------------------------------------------------------- interactive

void DecisionQueue::push(Item item) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        items_.push_back(std::move(item));
    }
    cv_.notify_all();
}

std::optional<DecisionQueue::Item> DecisionQueue::pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); })) return std::nullopt;
    if (items_.empty()) return std::nullopt;
    Item it = std::move(items_.front());
    items_.pop_front();
    return it;
}

void DecisionQueue::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool DecisionQueue::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::vector<std::string> InteractiveOracle::preference(std::vector<std::string> agents) const {
    return fallback_ ? fallback_->preference(std::move(agents)) : agents;
}

OracleDecision InteractiveOracle::decide(const OracleRequest& req) {
    if (!hooks_.claimed || !hooks_.claimed(req.agent))
        return fallback_ ? fallback_->decide(req) : OracleDecision::pass_turn();
    if (hooks_.publish) hooks_.publish(req);
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    auto finish = [&](OracleDecision d) {
        if (hooks_.retire) hooks_.retire(req);
        return d;
    };
    for (;;) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return finish(OracleDecision::pass_turn());
        auto item = queue_.pop(left);
        if (!item) return finish(OracleDecision::pass_turn());
        if (item->request_id != req.request_id) continue;
        if (item->decision.pass) return finish(OracleDecision::pass_turn());
        std::string why;
        if (item->decision.alternative >= req.alternatives.size()) {
            why = "no alternative " + std::to_string(item->decision.alternative);
        } else if (req.try_bind(item->decision.alternative, item->decision.bindings, &why)) {
            return finish(item->decision);
        }
        if (hooks_.reject) hooks_.reject(req, why);
    }
}

}  // namespace scpl
