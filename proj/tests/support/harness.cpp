#include "harness.hpp"

#include "oracles.hpp"
#include "scpl/eval.hpp"
#include "scpl/parser.hpp"

#include <algorithm>
#include <random>

#ifndef SCPL_SOURCE_DIR
#error "SCPL_SOURCE_DIR must point at the source tree"
#endif

namespace harness {

using namespace scpl;

std::string source_path(const std::string& rel) { return std::string(SCPL_SOURCE_DIR) + "/" + rel; }

const std::vector<std::string>& corpus_names() {
    static const std::vector<std::string> names{"endowment",     "tourists_hosts", "brokered",        "egalitarian",
                                                "citizens_band", "managed_group",  "democratic_group"};
    return names;
}

Contract corpus_contract(const std::string& stem) {
    CheckedProgram cp = load_program(source_path("corpus/" + stem + ".scpl"));
    if (!cp.clean()) throw std::runtime_error(stem + " has static violations");
    return Contract(std::move(cp));
}

RandomRun random_run(const Contract& contract, std::uint64_t seed, std::uint64_t max_steps,
                     const std::function<void(const Configuration&)>& each) {
    RandomOracle oracle(contract, seed * 7919 + 17);
    RunOptions opts;
    opts.scheduler = SchedulerKind::Random;
    opts.seed = seed;
    opts.fairness = 8;
    Engine engine(contract, opts, &oracle);
    oracle.set_agents([&engine] { return engine.config().live(); });
    int retries = 0;
    while (engine.config().step < max_steps) {
        if (engine.step()) {
            if (each) each(engine.config());
            continue;
        }
        if (++retries > 3) break;
        engine.clear_passed();
    }
    engine.finish();
    return {engine.trace(), engine.config(), engine.config().step};
}

namespace {

std::optional<std::vector<std::string>> secretary_members(const Configuration& c) {
    for (const auto& a : c.order) {
        const AgentCell& cell = c.agents.at(a);
        if (!cell.autonomous) continue;
        const Term& s = cell.state;
        if (!(s.is_compound() && s.text() == "secretary" && s.arity() == 1)) return std::nullopt;
        auto items = list_items(s.arg(0));
        if (!items) return std::nullopt;
        std::vector<std::string> out;
        for (const auto& t : *items) out.push_back(t.text());
        return out;
    }
    return std::nullopt;
}

}  // namespace

DemocraticOutcome democratic_run(std::uint64_t seed, std::size_t proposals) {
    DemocraticOutcome out;
    Contract k = corpus_contract("democratic_group");
    ScriptedOracle script;
    script.append("fay", parse_term("activated(autonomous, secretary([fay]))"));
    Engine engine(k, RunOptions{}, &script);
    engine.run(100000);

    std::mt19937_64 rng(seed);
    std::vector<std::string> members{"fay"};  // ballot order: newest first
    int fresh = 0;
    for (std::size_t p = 0; p < proposals; ++p) {
        bool add = members.size() == 1 || std::uniform_int_distribution<int>(0, 1)(rng) == 0;
        std::string target = add ? "m" + std::to_string(++fresh)
                                 : members[std::uniform_int_distribution<std::size_t>(0, members.size() - 2)(rng)];
        std::string proposal = (add ? "add(" : "remove(") + target + ")";
        script.append("fay", parse_term("propose(" + proposal + ")"));
        std::vector<int> deltas;
        int r = 0;
        for (const auto& voter : members) {
            int d = std::uniform_int_distribution<int>(-1, 1)(rng);
            deltas.push_back(d);
            r += d;
            script.append(voter, parse_term("ballot(_,_," + std::to_string(r) + ")"));
        }
        engine.clear_passed();
        engine.run(engine.config().step + 100000);
        ++out.proposals;

        bool applied = oracle::tally(deltas);
        std::vector<std::string> expect = members;
        if (applied) {
            if (add) expect.insert(expect.begin(), target);
            else expect.erase(std::find(expect.begin(), expect.end(), target));
        }
        auto got = secretary_members(engine.config());
        bool ok = got && *got == expect;
        if (add) ok = ok && engine.config().has(target) == applied;
        else ok = ok && engine.config().cell(target).stopped == applied;
        for (const auto& voter : members) ok = ok && script.remaining(voter) == 0;
        if (!ok) {
            ++out.mismatches;
            out.notes.push_back("seed " + std::to_string(seed) + " proposal " + proposal + " expected " +
                                (applied ? "applied" : "rejected"));
        }
        members = expect;
    }
    engine.finish();
    out.trace_ok = verify_trace(k, engine.trace()).ok();
    return out;
}

OutputPolicy hello_policy() {
    return [](const std::string& v, const History& own) -> std::vector<Term> {
        for (const auto& a : own)
            if (a.signer == v) return {};
        return {Term::name("hello")};
    };
}

OutputPolicy broadcast_policy() {
    return [](const std::string& v, const History& own) -> std::vector<Term> {
        if (v != "a" || !own.empty()) return {};
        return {Term::name("msg")};
    };
}

OutputPolicy currency_policy(int endowment, std::size_t cap) {
    return [endowment, cap](const std::string& v, const History& own) -> std::vector<Term> {
        if (own.size() >= cap) return {};
        Decimal bal = balance_of(own, v, endowment);
        if (bal < Decimal(1)) return {};
        std::vector<Term> out;
        for (const char* w : {"a", "b"})
            if (v != w) out.push_back(Term::compound("pay", {Term::name(w)}));
        return out;
    };
}

}  // namespace harness
