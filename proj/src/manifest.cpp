#include "scpl/manifest.hpp"

#include "scpl/parser.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

namespace scpl {

RunOptions RunManifest::run_options() const {
    RunOptions o;
    o.scheduler = scheduler;
    o.seed = seed;
    o.priority = priority;
    o.fairness = fairness;
    return o;
}

SchedulerKind parse_scheduler(const std::string& s) {
    if (s == "canonical") return SchedulerKind::Canonical;
    if (s == "random") return SchedulerKind::Random;
    throw std::runtime_error("unknown scheduler " + s + " (canonical|random)");
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) {
        auto b = part.find_first_not_of(" \t");
        auto e = part.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
    }
    return out;
}

RunManifest load_manifest(const std::string& path) {
    namespace fs = std::filesystem;
    auto j = nlohmann::json::parse(read_file(path));
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || p == "random" || fs::path(p).is_absolute()) return p;
        return (base / p).lexically_normal().string();
    };
    RunManifest m;
    m.contract = resolve(j.at("contract").get<std::string>());
    if (j.contains("oracle")) {
        std::string o = j["oracle"].get<std::string>();
        if (o != "interactive") m.oracle = resolve(o);
    }
    if (j.contains("scheduler")) m.scheduler = parse_scheduler(j["scheduler"].get<std::string>());
    m.seed = j.value("seed", std::uint64_t{0});
    m.max_steps = j.value("max_steps", std::uint64_t{1000});
    m.fairness = j.value("fairness", std::size_t{0});
    if (j.contains("priority")) m.priority = j["priority"].get<std::vector<std::string>>();
    if (j.contains("trace")) m.trace = resolve(j["trace"].get<std::string>());
    if (j.contains("jsonl")) m.jsonl = resolve(j["jsonl"].get<std::string>());
    if (j.contains("interactive")) m.interactive = j["interactive"].get<std::vector<std::string>>();
    m.token = j.value("token", std::string{});
    m.decision_timeout_ms = j.value("decision_timeout_ms", 30000);
    if (j.contains("static_dir")) m.static_dir = resolve(j["static_dir"].get<std::string>());
    return m;
}

CheckedProgram load_program(const std::string& path) {
    return check_program(parse_program(read_file(path), path));
}

}  // namespace scpl
