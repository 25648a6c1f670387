#pragma once

#include "scpl/runtime.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace scpl {

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// `H / <index> = agent(payload)`, oracle events as `agent(oracle(payload))`.
/// Empty for the other kinds.
std::string text_line(const TraceEvent& e);
/// Text trace, one line per act and oracle event, newline terminated.
std::string text_trace(const std::vector<TraceEvent>& events);

nlohmann::ordered_json to_json(const TraceEvent& e);
TraceEvent event_from_json(const nlohmann::json& j);

std::string jsonl_trace(const std::vector<TraceEvent>& events);
/// Throws TraceFormatError naming the offending line.
std::vector<TraceEvent> read_jsonl(const std::string& text);

}  // namespace scpl
