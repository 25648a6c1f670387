#include "scpl/contract.hpp"

#include "scpl/eval.hpp"

#include <algorithm>

namespace scpl {

std::string render(const Act& a) { return render(Term::name(a.signer)) + "(" + render(a.payload) + ")"; }

bool is_stop(const Term& state) { return state.is_name() && state.text() == "stop"; }

Term activated_act(const Term& name, const Term& state) { return Term::compound("activated", {name, state}); }

namespace {

std::string index_key(const Term& t) { return state_functor(t) + "/" + std::to_string(t.arity()); }

bool contains(const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

const std::vector<const Rule*> kNoRules;

// Spawn name with `autonomous` replaced by a placeholder variable.
Term spawn_name_pattern(const Spawn& s) { return s.autonomous() ? Term::var("$spawned") : s.name; }

}  // namespace

Contract::Contract(CheckedProgram checked) {
    auto d = std::make_shared<Data>();
    d->checked = std::move(checked);
    for (const auto& role : d->checked.program.roles)
        for (const auto& r : role.rules) d->index[index_key(r.pre)].push_back(&r);
    data_ = std::move(d);
}

const std::vector<const Rule*>& Contract::rules_for(const Term& state) const {
    auto it = data_->index.find(index_key(state));
    return it == data_->index.end() ? kNoRules : it->second;
}

std::vector<Alternative> Contract::alternatives(const Term& state, const std::string& self) const {
    std::vector<Alternative> out;
    for (const Rule* rule : rules_for(state)) {
        if (!rule->emits() || rule->input) continue;
        auto m = match(rule->pre, state, {{"Self", Term::name(self)}});
        if (!m) continue;
        Alternative alt;
        alt.rule = rule;
        alt.theta = std::move(*m);
        bool excluded = false;
        std::vector<std::string> produced;
        for (const auto& c : rule->conditions) {
            if (!alt.residual.empty()) {
                alt.residual.push_back(c);
                continue;
            }
            bool readable = true;
            for (const auto& v : read_vars(c)) readable = readable && alt.theta.count(v);
            if (!readable) {
                alt.residual.push_back(c);
                continue;
            }
            if (const auto* ch = std::get_if<AssignChoice>(&c); ch && !alt.theta.count(ch->var)) {
                for (const auto& o : ch->options) alt.choice_options.push_back(*eval_value(o, alt.theta));
                alt.choice_var = ch->var;
                alt.residual.push_back(c);
                continue;
            }
            EvalResult r = eval_conditions({c}, alt.theta);
            if (!r.ok()) {
                excluded = true;
                break;
            }
            alt.theta = std::move(r.theta);
        }
        if (excluded) continue;
        for (const auto& c : alt.residual) {
            std::string p = produced_var(c);
            if (p.empty() || p == alt.choice_var) continue;
            if (std::holds_alternative<AssignChoice>(c)) continue;  // options unknown: must be supplied
            produced.push_back(p);
        }
        for (const auto& v : free_rule_vars(*rule))
            if (!alt.theta.count(v) && !contains(produced, v) && v != alt.choice_var) alt.required_vars.push_back(v);
        for (const auto& c : alt.residual)
            if (const auto* ch = std::get_if<AssignChoice>(&c); ch && ch->var != alt.choice_var &&
                                                                 !contains(alt.required_vars, ch->var))
                alt.required_vars.push_back(ch->var);
        if (rule->output) {
            alt.act_pattern = substitute(*rule->output, alt.theta);
        } else {
            alt.act_pattern = activated_act(substitute(rule->spawn->name, alt.theta),
                                            substitute(rule->spawn->state, alt.theta));
        }
        out.push_back(std::move(alt));
    }
    return out;
}

std::optional<GroundStep> Contract::bind(const Alternative& alt, const Substitution& bindings,
                                         std::string* why) const {
    auto fail = [&](std::string w) -> std::optional<GroundStep> {
        if (why) *why = std::move(w);
        return std::nullopt;
    };
    Substitution theta = alt.theta;
    for (const auto& [k, v] : bindings) {
        if (!v.ground()) return fail("binding for " + k + " is not ground");
        if (!contains(alt.required_vars, k) && k != alt.choice_var) {
            auto it = theta.find(k);
            if (it != theta.end() && it->second == v) continue;
            return fail("variable " + k + " is not open in this alternative");
        }
        theta[k] = v;
    }
    for (const auto& v : alt.required_vars)
        if (!theta.count(v)) return fail("variable " + v + " is not bound");
    EvalResult r;
    try {
        r = eval_conditions(alt.rule->conditions, theta);
    } catch (const ArithmeticOnNonNumber& e) {
        return fail(e.what());
    }
    if (r.status == EvalResult::Status::NeedsChoice) return fail("no choice given for " + r.choice_var);
    if (!r.ok()) return fail(r.diagnostic);
    GroundStep g;
    g.rule = alt.rule;
    g.theta = std::move(r.theta);
    if (alt.rule->output) {
        g.payload = substitute(*alt.rule->output, g.theta);
        if (!g.payload->ground()) return fail("act " + render(*g.payload) + " is not ground");
    }
    if (alt.rule->spawn) {
        Spawn s{substitute(alt.rule->spawn->name, g.theta), substitute(alt.rule->spawn->state, g.theta)};
        if (!s.name.is_name()) return fail("spawn name " + render(s.name) + " is not a name");
        if (!s.state.ground()) return fail("spawn state " + render(s.state) + " is not ground");
        g.spawn = std::move(s);
    }
    g.post = substitute(alt.rule->post, g.theta);
    if (!g.post.ground()) return fail("post-state " + render(g.post) + " is not ground");
    return g;
}

std::optional<Term> Contract::apply_input(const Term& state, const std::string& self, const std::string& signer,
                                          const Term& payload) const {
    std::string failure;
    for (const Rule* rule : rules_for(state)) {
        if (!rule->input) continue;
        auto m = match(rule->pre, state, {{"Self", Term::name(self)}});
        if (!m) continue;
        m = match(*rule->input, signer, payload, std::move(*m));
        if (!m) continue;
        EvalResult r;
        try {
            r = eval_conditions(rule->conditions, std::move(*m));
        } catch (const ArithmeticOnNonNumber& e) {
            failure = e.what();
            continue;
        }
        if (!r.ok()) {
            failure = r.status == EvalResult::Status::NeedsChoice ? "input rule needs a choice for " + r.choice_var
                                                                  : r.diagnostic;
            continue;
        }
        Term post = substitute(rule->post, r.theta);
        if (!post.ground()) throw ConditionFailed("post-state " + render(post) + " of input rule is not ground");
        return post;
    }
    if (!failure.empty())
        throw ConditionFailed(self + " in " + render(state) + " matched " + signer + "(" + render(payload) +
                              ") but " + failure);
    return std::nullopt;
}

Term Contract::silent_closure(const Term& start, const std::string& self, std::size_t cap) const {
    Term state = start;
    for (std::size_t n = 0;; ++n) {
        if (is_stop(state)) return state;
        const Rule* fired = nullptr;
        Term next;
        for (const Rule* rule : rules_for(state)) {
            if (!rule->silent()) continue;
            auto m = match(rule->pre, state, {{"Self", Term::name(self)}});
            if (!m) continue;
            EvalResult r;
            try {
                r = eval_conditions(rule->conditions, std::move(*m));
            } catch (const ArithmeticOnNonNumber& e) {
                throw ConditionFailed(self + ": " + e.what());
            }
            if (!r.ok()) continue;
            next = substitute(rule->post, r.theta);
            if (!next.ground()) continue;
            fired = rule;
            break;
        }
        if (!fired) return state;
        if (n >= cap)
            throw SilentLoop(self + ": more than " + std::to_string(cap) + " silent steps from " + render(start));
        state = next;
    }
}

std::vector<GroundStep> Contract::explain_output(const Term& state, const std::string& self, const Term& payload,
                                                 const std::optional<Term>& next_payload) const {
    std::vector<GroundStep> out;
    for (const Rule* rule : rules_for(state)) {
        if (!rule->emits() || rule->input) continue;
        auto m = match(rule->pre, state, {{"Self", Term::name(self)}});
        if (!m) continue;
        if (rule->output) {
            m = match(*rule->output, payload, std::move(*m));
            if (!m) continue;
        }
        if (rule->spawn) {
            const Term& spawn_act = rule->output ? (next_payload ? *next_payload : Term()) : payload;
            Term pat = activated_act(spawn_name_pattern(*rule->spawn), rule->spawn->state);
            if (!spawn_act.ground()) continue;
            m = match(pat, spawn_act, std::move(*m));
            if (!m) continue;
        }
        EvalResult r;
        try {
            r = eval_conditions(rule->conditions, std::move(*m));
        } catch (const ArithmeticOnNonNumber&) {
            continue;
        }
        if (!r.ok()) continue;
        GroundStep g;
        g.rule = rule;
        g.theta = std::move(r.theta);
        if (rule->output) g.payload = payload;
        if (rule->spawn) {
            Term name = rule->spawn->autonomous() ? g.theta.at("$spawned") : substitute(rule->spawn->name, g.theta);
            g.spawn = Spawn{name, substitute(rule->spawn->state, g.theta)};
        }
        g.post = substitute(rule->post, g.theta);
        if (!g.post.ground()) continue;
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace scpl
