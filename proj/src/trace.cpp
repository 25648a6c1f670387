#include "scpl/trace.hpp"

#include "scpl/parser.hpp"

#include <sstream>

namespace scpl {

namespace {

std::string agent_text(const std::string& a) { return render(Term::name(a)); }

TraceEvent::Kind kind_from(const std::string& s) {
    if (s == "oracle") return TraceEvent::Kind::Oracle;
    if (s == "act") return TraceEvent::Kind::Act;
    if (s == "recv") return TraceEvent::Kind::Recv;
    if (s == "stop") return TraceEvent::Kind::Stop;
    if (s == "final") return TraceEvent::Kind::Final;
    throw std::runtime_error("unknown record kind " + s);
}

Term ground_term(const nlohmann::json& j, const char* field) {
    Term t = parse_term(j.at(field).get<std::string>());
    if (!t.ground()) throw std::runtime_error(std::string(field) + " is not ground");
    return t;
}

}  // namespace

std::string text_line(const TraceEvent& e) {
    switch (e.kind) {
        case TraceEvent::Kind::Oracle:
            return "H / " + std::to_string(e.index) + " = " + agent_text(e.agent) + "(oracle(" + render(e.payload) + "))";
        case TraceEvent::Kind::Act:
            return "H / " + std::to_string(e.index) + " = " + agent_text(e.agent) + "(" + render(e.payload) + ")";
        default: return {};
    }
}

std::string text_trace(const std::vector<TraceEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        std::string l = text_line(e);
        if (!l.empty()) out += l + "\n";
    }
    return out;
}

nlohmann::ordered_json to_json(const TraceEvent& e) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(e.kind);
    j["step"] = e.step;
    if (e.kind == TraceEvent::Kind::Oracle || e.kind == TraceEvent::Kind::Act) j["index"] = e.index;
    j["agent"] = e.agent;
    switch (e.kind) {
        case TraceEvent::Kind::Oracle: j["payload"] = render(e.payload); break;
        case TraceEvent::Kind::Act:
            j["payload"] = render(e.payload);
            j["seq"] = e.seq;
            j["recipients"] = e.recipients;
            if (e.spawn)
                j["spawn"] = {{"agent", e.spawn->agent},
                              {"state", render(e.spawn->state)},
                              {"autonomous", e.spawn->autonomous}};
            break;
        case TraceEvent::Kind::Recv:
            j["from"] = e.from;
            j["seq"] = e.seq;
            j["payload"] = render(e.payload);
            break;
        case TraceEvent::Kind::Stop: break;
        case TraceEvent::Kind::Final:
            j["state"] = render(e.state);
            j["stopped"] = e.stopped;
            j["history"] = e.history;
            break;
    }
    return j;
}

TraceEvent event_from_json(const nlohmann::json& j) {
    TraceEvent e;
    e.kind = kind_from(j.at("kind").get<std::string>());
    e.step = j.at("step").get<std::uint64_t>();
    e.agent = j.at("agent").get<std::string>();
    if (e.kind == TraceEvent::Kind::Oracle || e.kind == TraceEvent::Kind::Act) e.index = j.at("index").get<std::uint64_t>();
    switch (e.kind) {
        case TraceEvent::Kind::Oracle: e.payload = ground_term(j, "payload"); break;
        case TraceEvent::Kind::Act:
            e.payload = ground_term(j, "payload");
            e.seq = j.at("seq").get<std::uint64_t>();
            e.recipients = j.at("recipients").get<std::vector<std::string>>();
            if (j.contains("spawn")) {
                const auto& s = j.at("spawn");
                e.spawn = SpawnInfo{s.at("agent").get<std::string>(), ground_term(s, "state"),
                                    s.at("autonomous").get<bool>()};
            }
            break;
        case TraceEvent::Kind::Recv:
            e.from = j.at("from").get<std::string>();
            e.seq = j.at("seq").get<std::uint64_t>();
            e.payload = ground_term(j, "payload");
            break;
        case TraceEvent::Kind::Stop: break;
        case TraceEvent::Kind::Final:
            e.state = ground_term(j, "state");
            e.stopped = j.at("stopped").get<bool>();
            e.history = j.at("history").get<std::uint64_t>();
            break;
    }
    return e;
}

std::string jsonl_trace(const std::vector<TraceEvent>& events) {
    std::string out;
    for (const auto& e : events) out += to_json(e).dump() + "\n";
    return out;
}

std::vector<TraceEvent> read_jsonl(const std::string& text) {
    std::vector<TraceEvent> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(event_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& ex) {
            throw TraceFormatError(n, ex.what());
        }
    }
    return out;
}

}  // namespace scpl
