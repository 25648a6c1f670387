#pragma once

#include "scpl/program.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scpl {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(int line, int col, std::string message, std::vector<std::string> expected = {});
    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& message() const { return message_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    int line_, col_;
    std::string message_;
    std::vector<std::string> expected_;
};

class DuplicateAgent : public std::runtime_error {
public:
    explicit DuplicateAgent(std::string agent)
        : std::runtime_error("duplicate agent " + agent), agent_(std::move(agent)) {}
    const std::string& agent() const { return agent_; }

private:
    std::string agent_;
};

/// A single term. `_` becomes a fresh variable; `a#b` is the compound `#(a,b)`.
Term parse_term(std::string_view text);

/// Whole `.scpl` source: optional `activation [...] .` then rule clauses.
Program parse_program(std::string_view text, std::string source_name = "<input>");

/// `[name#state, ...]`
std::vector<std::pair<std::string, Term>> parse_activation(std::string_view text);

/// Reads a file; throws std::runtime_error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace scpl
