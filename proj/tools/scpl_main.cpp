// scpl: check, run, verify and serve social contract programs.
//
// Exit status: 0 ok, 1 static violations / failed checks, 2 usage, I/O or
// syntax errors (and a busy port), 3 runtime contract faults.

#include "scpl/gateway.hpp"
#include "scpl/manifest.hpp"
#include "scpl/parser.hpp"
#include "scpl/trace.hpp"
#include "scpl/verifier.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

using namespace scpl;

namespace {

constexpr int kOk = 0, kViolations = 1, kUsage = 2, kFault = 3;

struct Loaded {
    std::optional<Contract> contract;
    int status = kOk;
};

Loaded load(const std::string& path, bool json_diagnostics) {
    Loaded out;
    try {
        CheckedProgram checked = load_program(path);
        for (const auto& v : checked.diagnostics)
            std::cerr << (json_diagnostics ? format_diagnostic_json(path, v) : format_diagnostic(path, v)) << '\n';
        if (!checked.clean()) {
            out.status = kViolations;
            return out;
        }
        out.contract.emplace(std::move(checked));
    } catch (const SyntaxError& e) {
        std::cerr << path << ':' << e.line() << ':' << e.col() << ": syntax error: " << e.message();
        if (!e.expected().empty()) {
            std::cerr << " (expected";
            for (const auto& x : e.expected()) std::cerr << ' ' << x;
            std::cerr << ')';
        }
        std::cerr << '\n';
        out.status = kUsage;
    } catch (const DuplicateAgent& e) {
        std::cerr << path << ": " << e.what() << '\n';
        out.status = kUsage;
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << '\n';
        out.status = kUsage;
    }
    return out;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << path << '\n';
        return false;
    }
    out << text;
    return static_cast<bool>(out);
}

struct RunArgs {
    std::string file, manifest, oracle, scheduler, trace, jsonl, priority;
    std::uint64_t seed = 0, max_steps = 0;
    std::size_t fairness = 0;
    bool seed_set = false, max_steps_set = false, fairness_set = false;
};

// Manifest first, then command-line overrides.
std::optional<RunManifest> resolve(const RunArgs& a) {
    RunManifest m;
    if (!a.manifest.empty()) m = load_manifest(a.manifest);
    if (!a.file.empty()) m.contract = a.file;
    if (m.contract.empty()) {
        std::cerr << "no contract: give a .scpl file or --manifest\n";
        return std::nullopt;
    }
    if (!a.oracle.empty()) m.oracle = a.oracle;
    if (!a.scheduler.empty()) m.scheduler = parse_scheduler(a.scheduler);
    if (a.seed_set) m.seed = a.seed;
    if (a.max_steps_set) m.max_steps = a.max_steps;
    if (a.fairness_set) m.fairness = a.fairness;
    if (!a.priority.empty()) m.priority = split_names(a.priority);
    if (!a.trace.empty()) m.trace = a.trace;
    if (!a.jsonl.empty()) m.jsonl = a.jsonl;
    return m;
}

std::unique_ptr<Oracle> make_oracle(const RunManifest& m, const Contract& contract, const Engine** engine) {
    if (m.oracle.empty() || m.oracle == "random") {
        auto r = std::make_unique<RandomOracle>(contract, m.seed);
        r->set_agents([engine] { return *engine ? (*engine)->config().live() : std::vector<std::string>{}; });
        return r;
    }
    return std::make_unique<ScriptedOracle>(ScriptedOracle::from_file(m.oracle));
}

int write_traces(const RunManifest& m, const Engine& engine) {
    std::string text = text_trace(engine.trace());
    if (m.trace.empty()) {
        std::cout << text;
    } else if (!write_file(m.trace, text)) {
        return kUsage;
    }
    std::string jsonl = m.jsonl.empty() && !m.trace.empty() ? m.trace + ".jsonl" : m.jsonl;
    if (!jsonl.empty() && !write_file(jsonl, jsonl_trace(engine.trace()))) return kUsage;
    return kOk;
}

int cmd_check(const std::string& file, bool json) {
    Loaded l = load(file, json);
    return l.status;
}

int cmd_run(const RunArgs& args) {
    std::optional<RunManifest> m;
    try {
        m = resolve(args);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    }
    if (!m) return kUsage;
    Loaded l = load(m->contract, false);
    if (!l.contract) return l.status;
    const Engine* engine_ref = nullptr;
    std::unique_ptr<Oracle> oracle;
    try {
        oracle = make_oracle(*m, *l.contract, &engine_ref);
    } catch (const std::exception& e) {
        std::cerr << m->oracle << ": " << e.what() << '\n';
        return kUsage;
    }
    int status = kOk;
    std::optional<Engine> engine;
    try {
        engine.emplace(*l.contract, m->run_options(), oracle.get());
        engine_ref = &*engine;
        engine->run(m->max_steps);
    } catch (const ContractFault& e) {
        std::cerr << e.kind() << ": " << e.what() << '\n';
        status = kFault;
        if (!engine) return status;
    }
    engine->finish();
    int w = write_traces(*m, *engine);
    return status != kOk ? status : w;
}

int cmd_verify(const std::string& file, const std::string& trace, bool json) {
    Loaded l = load(file, false);
    if (!l.contract) return l.status;
    std::vector<TraceEvent> events;
    try {
        events = read_jsonl(read_file(trace));
    } catch (const std::exception& e) {
        std::cerr << trace << ": " << e.what() << '\n';
        return kUsage;
    }
    VerifyReport r = verify_trace(*l.contract, events);
    std::cout << (json ? r.json() + "\n" : r.text());
    return r.ok() ? kOk : kViolations;
}

struct ServeArgs {
    RunArgs run;
    std::string address = "127.0.0.1", token, interactive, static_dir;
    int port = 8080;
    int decision_timeout_ms = -1, heartbeat_ms = 2000;
    bool exit_when_idle = false;
};

int cmd_serve(const ServeArgs& a) {
    std::optional<RunManifest> m;
    try {
        m = resolve(a.run);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    }
    if (!m) return kUsage;
    if (!a.token.empty()) m->token = a.token;
    if (!a.interactive.empty()) m->interactive = split_names(a.interactive);
    if (!a.static_dir.empty()) m->static_dir = a.static_dir;
    if (a.decision_timeout_ms >= 0) m->decision_timeout_ms = a.decision_timeout_ms;
    if (!a.run.max_steps_set && a.run.manifest.empty()) m->max_steps = 1000000;
    Loaded l = load(m->contract, false);
    if (!l.contract) return l.status;

    std::unique_ptr<ScriptedOracle> fallback;
    if (!m->oracle.empty() && m->oracle != "random") {
        try {
            fallback = std::make_unique<ScriptedOracle>(ScriptedOracle::from_file(m->oracle));
        } catch (const std::exception& e) {
            std::cerr << m->oracle << ": " << e.what() << '\n';
            return kUsage;
        }
    }
    GatewayOptions g;
    g.address = a.address;
    g.port = static_cast<unsigned short>(a.port);
    g.token = m->token;
    g.static_dir = m->static_dir;
    g.interactive = m->interactive;
    g.contract_name = m->contract;
    ServeOptions so;
    so.max_steps = m->max_steps;
    so.decision_timeout = std::chrono::milliseconds(m->decision_timeout_ms);
    so.heartbeat = std::chrono::milliseconds(a.heartbeat_ms);
    so.exit_when_idle = a.exit_when_idle;

    // Signals are taken by a watcher thread, not a handler.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    ServedRun run(*l.contract, m->run_options(), g, so, fallback.get());
    try {
        run.start();
    } catch (const PortInUse& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kUsage;
    }
    std::cerr << "serving " << m->contract << " on http://" << a.address << ':' << run.gateway().port() << "/ (ws: /ws)\n";

    std::atomic<bool> stop{false};
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&set, &sig);
        stop = true;
        run.gateway().decisions().close();
    });
    int status = kOk;
    try {
        run.run(stop);
    } catch (const ContractFault& e) {
        std::cerr << e.kind() << ": " << e.what() << '\n';
        status = kFault;
    }
    if (!stop) {
        // Wake the watcher so it can be joined.
        kill(getpid(), SIGTERM);
    }
    watcher.join();
    run.gateway().stop();
    int w = write_traces(*m, run.engine());
    return status != kOk ? status : w;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"social contract programs: check, run, verify, serve"};
    app.require_subcommand(1);

    std::string check_file;
    bool check_json = false;
    auto* check = app.add_subcommand("check", "parse and statically check a .scpl file");
    check->add_option("file", check_file)->required();
    check->add_flag("--json", check_json, "diagnostics as JSON lines");

    RunArgs run_args;
    auto add_run_options = [](CLI::App* sub, RunArgs& r) {
        sub->add_option("file", r.file, ".scpl contract");
        sub->add_option("--manifest", r.manifest, "run manifest (JSON)");
        sub->add_option("--oracle", r.oracle, "oracle script (JSON) or `random`");
        sub->add_option("--scheduler", r.scheduler, "canonical|random");
        sub->add_option("--seed", r.seed)->each([&r](const std::string&) { r.seed_set = true; });
        sub->add_option("--max-steps", r.max_steps)->each([&r](const std::string&) { r.max_steps_set = true; });
        sub->add_option("--fairness", r.fairness, "random scheduler: force triples enabled this long")
            ->each([&r](const std::string&) { r.fairness_set = true; });
        sub->add_option("--priority", r.priority, "canonical tie-break order, comma separated");
        sub->add_option("--trace", r.trace, "text trace output (default stdout)");
        sub->add_option("--jsonl", r.jsonl, "JSON-lines trace (default <trace>.jsonl)");
    };
    auto* run = app.add_subcommand("run", "run a contract and write its trace");
    add_run_options(run, run_args);

    std::string verify_file, verify_trace_path;
    bool verify_json = false;
    auto* verify = app.add_subcommand("verify", "check a JSON-lines trace against a contract");
    verify->add_option("file", verify_file)->required();
    verify->add_option("trace", verify_trace_path)->required();
    verify->add_flag("--json", verify_json, "report as JSON");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "run a contract behind the HTTP/WebSocket gateway");
    add_run_options(serve, serve_args.run);
    serve->add_option("--port", serve_args.port);
    serve->add_option("--address", serve_args.address);
    serve->add_option("--token", serve_args.token, "shared session token");
    serve->add_option("--interactive", serve_args.interactive, "claimable agents, comma separated");
    serve->add_option("--static", serve_args.static_dir, "console assets directory");
    serve->add_option("--decision-timeout-ms", serve_args.decision_timeout_ms);
    serve->add_option("--heartbeat-ms", serve_args.heartbeat_ms);
    serve->add_flag("--exit-when-idle", serve_args.exit_when_idle, "stop once quiescent with nothing claimed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (check->parsed()) return cmd_check(check_file, check_json);
    if (run->parsed()) return cmd_run(run_args);
    if (verify->parsed()) return cmd_verify(verify_file, verify_trace_path, verify_json);
    if (serve->parsed()) return cmd_serve(serve_args);
    return kUsage;
}
