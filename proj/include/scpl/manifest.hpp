#pragma once

#include "scpl/runtime.hpp"

#include <optional>
#include <string>
#include <vector>

namespace scpl {

/// What `scpl run` and `scpl serve` need. Paths are resolved against the
/// manifest's directory when loaded from a file.
struct RunManifest {
    std::string contract;
    std::string oracle;  // script path, "random", or empty (random)
    SchedulerKind scheduler = SchedulerKind::Canonical;
    std::uint64_t seed = 0;
    std::uint64_t max_steps = 1000;
    std::size_t fairness = 0;
    std::vector<std::string> priority;
    std::string trace;  // text trace path; empty: stdout
    std::string jsonl;  // empty: trace + ".jsonl"
    std::vector<std::string> interactive;  // agents served to sessions
    std::string token;
    int decision_timeout_ms = 30000;
    std::string static_dir;

    RunOptions run_options() const;
};

RunManifest load_manifest(const std::string& path);
SchedulerKind parse_scheduler(const std::string& s);

/// Parse and check a `.scpl` file. Throws SyntaxError / std::runtime_error.
CheckedProgram load_program(const std::string& path);

/// Comma separated names, blanks dropped.
std::vector<std::string> split_names(const std::string& s);

}  // namespace scpl
