// Acceptance suite: one PASS/FAIL line per criterion, exit 1 on any FAIL.

#include "../support/harness.hpp"
#include "../support/oracles.hpp"
#include "scpl/parser.hpp"
#include "scpl/trace.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace scpl;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kGoldenSeconds = 1.0;
constexpr double kStaticSeconds = 10.0;
constexpr double kSoundnessSeconds = 60.0;
constexpr double kAtodSeconds = 30.0;
constexpr std::uint64_t kSeeds = 100;
constexpr std::uint64_t kMaxSteps = 500;
constexpr std::uint64_t kDemocraticSeeds = 50;
constexpr std::size_t kProposalsPerRun = 4;
constexpr int kEndowment = 10;
constexpr std::uint64_t kMutationSteps = 60;  // random traces mutated line by line

struct Outcome {
    bool ok = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string secs(double s) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << s << " s";
    return os.str();
}

// ------------------------------------------------------------------ golden

Outcome golden() {
    auto t0 = Clock::now();
    RunManifest m = load_manifest(harness::source_path("corpus/golden/tourists_hosts.manifest.json"));
    Contract k(load_program(m.contract));
    ScriptedOracle o = ScriptedOracle::from_file(m.oracle);
    Engine e(k, m.run_options(), &o);
    e.run(m.max_steps);
    std::string got = text_trace(e.trace());
    double lib = seconds_since(t0);

    std::string want = read_file(harness::source_path("corpus/golden/tourists_hosts.trace"));
    std::size_t lines = std::count(want.begin(), want.end(), '\n');
    if (got != want) return {false, "library trace differs from the golden file"};

    auto out = std::filesystem::temp_directory_path() / ("scpl_golden_" + std::to_string(::getpid()) + ".trace");
    auto t1 = Clock::now();
    std::string cmd = std::string(SCPL_BIN) + " run --manifest " +
                      harness::source_path("corpus/golden/tourists_hosts.manifest.json") + " --trace " + out.string() +
                      " >/dev/null 2>&1";
    int raw = std::system(cmd.c_str());
    double cli = seconds_since(t1);
    bool cli_ok = WIFEXITED(raw) && WEXITSTATUS(raw) == 0 && read_file(out.string()) == want;
    std::filesystem::remove(out);
    std::filesystem::remove(out.string() + ".jsonl");
    if (!cli_ok) return {false, "scpl run output differs from the golden file"};
    bool fast = lib < kGoldenSeconds && cli < kGoldenSeconds;
    return {fast && lines == 9, std::to_string(lines) + " lines byte-identical; library " + secs(lib) + ", cli " + secs(cli)};
}

// ------------------------------------------------------------------ static

Outcome static_checker() {
    auto t0 = Clock::now();
    const std::vector<Term> universe{Term::number(0), Term::number(1), Term::name("ann")};
    CheckedProgram fx = load_program(harness::source_path("tests/fixtures/nd_violations.scpl"));
    std::size_t nd = 0, witnessed = 0;
    for (const auto& v : fx.diagnostics) {
        nd += v.kind == Violation::Kind::ExplicitND;
        witnessed += v.kind == Violation::Kind::ExplicitND && v.witness.has_value() && v.posts.size() == 2 &&
                     v.posts[0] != v.posts[1];
    }
    bool ok = fx.diagnostics.size() == 3 && nd == 3 && witnessed == 3;
    std::size_t corpus_violations = 0, roles = 0, disagreements = 0;
    for (const auto& name : harness::corpus_names()) {
        CheckedProgram cp = load_program(harness::source_path("corpus/" + name + ".scpl"));
        corpus_violations += cp.diagnostics.size();
        for (const auto& role : cp.program.roles) {
            ++roles;
            bool symbolic = !check_explicit_nd({role}).empty();
            bool brute = !oracle::brute_nd(role, universe, "self").empty();
            disagreements += symbolic != brute;
        }
    }
    double t = seconds_since(t0);
    ok = ok && corpus_violations == 0 && disagreements == 0 && t < kStaticSeconds;
    return {ok, "fixture " + std::to_string(nd) + " ExplicitND (" + std::to_string(witnessed) + " witnessed); corpus " +
                    std::to_string(corpus_violations) + " violations; brute disagreements " +
                    std::to_string(disagreements) + "/" + std::to_string(roles) + " roles; " + secs(t)};
}

// ------------------------------------------------------------------ random runs

/// Live balance from an `agent(N)` state.
std::optional<Decimal> live_balance(const Term& s) {
    if (s.is_compound() && s.text() == "agent" && s.arity() == 1 && s.arg(0).is_number()) return s.arg(0).value();
    return std::nullopt;
}

struct RandomStats {
    std::size_t runs = 0, transitions = 0;
    std::size_t unsound = 0, inconsistent = 0, store = 0, divergences = 0, replayed = 0;
    std::size_t currency_runs = 0, currency_violations = 0, currency_checks = 0;
    std::size_t traces = 0, bad_traces = 0;
    std::vector<std::string> notes;
    double seconds = 0;
};

void note(RandomStats& st, const std::string& s) {
    if (st.notes.size() < 5) st.notes.push_back(s);
}

/// Endowment: global balances (over every emitted act) never go negative
/// and always sum to c·|V|; each agent's own view gives its live balance.
void check_endowment(const Configuration& c, RandomStats& st, const std::string& where) {
    std::map<std::string, Decimal> global;
    for (const auto& a : c.order) global[a] = Decimal(kEndowment);
    for (const auto& a : c.order)
        for (const auto& act : c.agents.at(a).history) {
            if (act.signer != a) continue;  // the signer's own copy: each emitted act once
            const Term& p = act.payload;
            if (!(p.is_compound() && p.text() == "pay" && p.arity() == 1)) continue;
            global[a] = global[a] - Decimal(1);
            global[p.arg(0).text()] = global[p.arg(0).text()] + Decimal(1);
        }
    Decimal sum(0);
    for (const auto& [a, b] : global) {
        sum = sum + b;
        if (b < Decimal(0)) {
            ++st.currency_violations;
            note(st, where + ": " + a + " global balance " + b.str());
        }
    }
    if (sum != Decimal(kEndowment * static_cast<long long>(c.order.size()))) {
        ++st.currency_violations;
        note(st, where + ": balances sum to " + sum.str());
    }
    for (const auto& a : c.order) {
        const AgentCell& cell = c.agents.at(a);
        auto live = live_balance(cell.state);
        if (!live) continue;
        if (*live < Decimal(0) || balance_of(cell.history, a, Decimal(kEndowment)) != *live) {
            ++st.currency_violations;
            note(st, where + ": " + a + " live " + live->str());
        }
    }
    ++st.currency_checks;
}

/// Egalitarian: ticks received + payments received - payments sent,
/// counted straight off the history.
void check_egalitarian(const Configuration& c, RandomStats& st, const std::string& where) {
    for (const auto& a : c.order) {
        const AgentCell& cell = c.agents.at(a);
        auto live = live_balance(cell.state);
        if (!live) continue;
        Decimal want(0);
        for (const auto& act : cell.history) {
            const Term& p = act.payload;
            if (act.signer == "clock" && p.is_name() && p.text() == "tick") want = want + Decimal(1);
            if (!(p.is_compound() && p.text() == "pay" && p.arity() == 2 && p.arg(1).is_number())) continue;
            if (act.signer == a) want = want - p.arg(1).value();
            else if (p.arg(0).text() == a) want = want + p.arg(1).value();
        }
        if (want != *live || *live < Decimal(0)) {
            ++st.currency_violations;
            note(st, where + ": " + a + " live " + live->str() + " expected " + want.str());
        }
    }
    ++st.currency_checks;
}

std::vector<std::vector<TraceEvent>> g_mutation_traces;

RandomStats random_suite() {
    RandomStats st;
    auto t0 = Clock::now();
    for (const auto& name : harness::corpus_names()) {
        Contract k = harness::corpus_contract(name);
        bool endow = name == "endowment", egal = name == "egalitarian";
        for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
            std::string where = name + " seed " + std::to_string(seed);
            auto each = [&](const Configuration& c) {
                ++st.transitions;
                std::string at = where + " step " + std::to_string(c.step);
                if (auto v = check_sound(c)) {
                    ++st.unsound;
                    note(st, at + ": " + v->message);
                }
                if (auto p = check_all_consistent(c)) {
                    ++st.inconsistent;
                    note(st, at + ": " + p->first + " vs " + p->second);
                }
                if (auto s = check_store_invariant(c)) {
                    ++st.store;
                    note(st, at + ": " + *s);
                }
                if (endow) check_endowment(c, st, at);
                if (egal) check_egalitarian(c, st, at);
            };
            auto run = harness::random_run(k, seed, kMaxSteps, each);
            ++st.runs;
            st.currency_runs += endow || egal;

            Ledger l = ledger_of(run.final);
            auto init = initial_states(l, k.program());
            for (const auto& a : run.final.order) {
                ++st.replayed;
                const AgentCell& cell = run.final.agents.at(a);
                try {
                    if (replay_state(cell.history, k, a, init.at(a)) != cell.state) {
                        ++st.divergences;
                        note(st, where + ": replay of " + a + " differs");
                    }
                } catch (const std::exception& e) {
                    ++st.divergences;
                    note(st, where + ": replay of " + a + ": " + e.what());
                }
            }

            ++st.traces;
            VerifyReport r = verify_trace(k, read_jsonl(jsonl_trace(run.trace)));
            if (!r.ok()) {
                ++st.bad_traces;
                note(st, where + ": verify " + r.text());
            }
            if (seed == 1) g_mutation_traces.push_back(harness::random_run(k, seed, kMutationSteps).trace);
        }
    }
    st.seconds = seconds_since(t0);
    return st;
}

// ------------------------------------------------------------------ AtoD

oracle::Policy string_policy(const std::string& kind) {
    using Own = std::vector<std::pair<std::string, std::string>>;
    if (kind == "hello")
        return [](const std::string& v, const Own& own) {
            for (const auto& [u, a] : own)
                if (u == v) return std::vector<std::string>{};
            return std::vector<std::string>{"hello"};
        };
    if (kind == "broadcast")
        return [](const std::string& v, const Own& own) {
            return v == "a" && own.empty() ? std::vector<std::string>{"msg"} : std::vector<std::string>{};
        };
    // Currency, c = 1, own history shorter than 2.
    return [](const std::string& v, const Own& own) {
        if (own.size() >= 2) return std::vector<std::string>{};
        int bal = 1;
        for (const auto& [u, a] : own) {
            if (u == v && a.rfind("pay(", 0) == 0) --bal;
            if (u != v && a == "pay(" + v + ")") ++bal;
        }
        std::vector<std::string> out;
        if (bal < 1) return out;
        for (const char* w : {"a", "b"})
            if (v != w) out.push_back(std::string("pay(") + w + ")");
        return out;
    };
}

Outcome atod() {
    auto t0 = Clock::now();
    struct Toy {
        std::string name;
        std::vector<std::string> agents;
        OutputPolicy policy;
    };
    std::vector<Toy> toys{{"hello", {"a", "b"}, harness::hello_policy()},
                          {"broadcast", {"a", "b", "c"}, harness::broadcast_policy()},
                          {"currency", {"a", "b"}, harness::currency_policy(1, 2)}};
    bool ok = true;
    std::string detail;
    for (const auto& toy : toys) {
        SocialContract sc = generate_sc(toy.agents, toy.policy);
        Contract k(atod_compile(sc));
        std::set<std::string> compiled;
        Exploration ex = explore(k, [&](const Configuration& c) {
            compiled.insert(oracle::label_of(c));
            return drop_store(c);
        });
        auto want = oracle::sc_reachable(toy.agents, string_policy(toy.name));
        FiniteTS spec = sc_system(sc);
        auto cx = check_implementation(ex.ts, spec, ex.mapping, true);
        bool same = compiled == want.states && spec.states.size() == want.states.size();
        ok = ok && same && !cx;
        detail += toy.name + ": " + std::to_string(compiled.size()) + "/" + std::to_string(want.states.size()) +
                  " ledgers, " + std::to_string(ex.ts.states.size()) + " configurations, strict " +
                  (cx ? "FAIL (" + cx->message + ")" : std::string("ok")) + "; ";
    }
    double t = seconds_since(t0);
    ok = ok && t < kAtodSeconds;
    return {ok, detail + secs(t)};
}

// ------------------------------------------------------------------ democratic

Outcome democratic() {
    std::size_t proposals = 0, mismatches = 0, bad = 0;
    std::string first;
    for (std::uint64_t seed = 1; seed <= kDemocraticSeeds; ++seed) {
        auto out = harness::democratic_run(seed, kProposalsPerRun);
        proposals += out.proposals;
        mismatches += out.mismatches;
        bad += !out.trace_ok;
        if (first.empty() && !out.notes.empty()) first = out.notes.front();
    }
    return {mismatches == 0 && bad == 0 && proposals == kDemocraticSeeds * kProposalsPerRun,
            std::to_string(proposals) + " proposals over " + std::to_string(kDemocraticSeeds) + " runs, " +
                std::to_string(mismatches) + " mismatches, " + std::to_string(bad) + " traces failing verify" +
                (first.empty() ? "" : "; " + first)};
}

// ------------------------------------------------------------------ round-trip

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

bool verifies(const Contract& k, const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    try {
        return verify_trace(k, read_jsonl(text)).ok();
    } catch (const TraceFormatError&) {
        return false;
    }
}

struct Mutations {
    std::size_t tried = 0, missed = 0;
    std::string first;
};

/// Every deletion; swaps of same-sender records, all pairs or adjacent only.
void mutate(const Contract& k, const std::vector<TraceEvent>& events, bool all_pairs, Mutations& m,
            const std::string& label) {
    auto lines = lines_of(jsonl_trace(events));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto cut = lines;
        cut.erase(cut.begin() + static_cast<std::ptrdiff_t>(i));
        ++m.tried;
        if (verifies(k, cut)) {
            ++m.missed;
            if (m.first.empty()) m.first = label + ": deleting line " + std::to_string(i + 1) + " went unnoticed";
        }
    }
    for (std::size_t i = 0; i < events.size(); ++i)
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            if (events[i].agent != events[j].agent || lines[i] == lines[j]) continue;
            auto sw = lines;
            std::swap(sw[i], sw[j]);
            ++m.tried;
            if (verifies(k, sw)) {
                ++m.missed;
                if (m.first.empty())
                    m.first = label + ": swapping lines " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                              " went unnoticed";
            }
            if (!all_pairs) break;
        }
}

Outcome round_trip(const RandomStats& st) {
    Contract th = harness::corpus_contract("tourists_hosts");
    RunManifest m = load_manifest(harness::source_path("corpus/golden/tourists_hosts.manifest.json"));
    ScriptedOracle o = ScriptedOracle::from_file(m.oracle);
    Engine e(th, m.run_options(), &o);
    e.run(m.max_steps);
    e.finish();
    bool golden_ok = verify_trace(th, read_jsonl(jsonl_trace(e.trace()))).ok();

    Mutations mu;
    mutate(th, e.trace(), true, mu, "golden");
    for (std::size_t i = 0; i < g_mutation_traces.size(); ++i) {
        const std::string& name = harness::corpus_names().at(i);
        mutate(harness::corpus_contract(name), g_mutation_traces[i], false, mu, name);
    }
    bool ok = golden_ok && st.bad_traces == 0 && mu.missed == 0;
    return {ok, std::to_string(st.traces - st.bad_traces + golden_ok) + "/" + std::to_string(st.traces + 1) +
                    " emitted traces verify; " + std::to_string(mu.tried - mu.missed) + "/" +
                    std::to_string(mu.tried) + " deletions and same-sender swaps detected" +
                    (mu.first.empty() ? "" : "; " + mu.first)};
}

bool report(const std::string& name, const Outcome& o) {
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    return o.ok;
}

Outcome guarded(const std::function<Outcome()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("threw: ") + e.what()};
    }
}

}  // namespace

int main() {
    bool ok = true;
    ok &= report("golden-trace", guarded(golden));
    ok &= report("static-checker", guarded(static_checker));

    RandomStats st;
    Outcome crashed;
    try {
        st = random_suite();
    } catch (const std::exception& e) {
        crashed = {false, std::string("threw: ") + e.what()};
    }
    auto notes = [&] {
        std::string s;
        for (const auto& n : st.notes) s += "; " + n;
        return s;
    };
    auto or_crash = [&](Outcome o) { return crashed.ok ? o : crashed; };
    std::string scale = std::to_string(st.runs) + " runs, " + std::to_string(st.transitions) + " transitions";
    ok &= report("soundness", or_crash({st.unsound == 0 && st.inconsistent == 0 && st.seconds < kSoundnessSeconds &&
                                            st.runs == kSeeds * harness::corpus_names().size(),
                                        scale + ", " + std::to_string(st.unsound) + " unsound, " +
                                            std::to_string(st.inconsistent) + " inconsistent; " + secs(st.seconds) +
                                            notes()}));
    ok &= report("store-invariant",
                 or_crash({st.store == 0, scale + ", " + std::to_string(st.store) + " violations" + notes()}));
    ok &= report("replay", or_crash({st.divergences == 0, std::to_string(st.replayed) + " agents replayed, " +
                                                              std::to_string(st.divergences) + " divergences" +
                                                              notes()}));
    ok &= report("currency", or_crash({st.currency_violations == 0 && st.currency_runs == 2 * kSeeds,
                                       std::to_string(st.currency_runs) + " runs, " +
                                           std::to_string(st.currency_checks) + " checked steps, " +
                                           std::to_string(st.currency_violations) + " violations" + notes()}));
    ok &= report("atod-morphism", guarded(atod));
    ok &= report("democratic-group", guarded(democratic));
    ok &= report("trace-round-trip", crashed.ok ? guarded([&] { return round_trip(st); }) : crashed);
    return ok ? 0 : 1;
}
