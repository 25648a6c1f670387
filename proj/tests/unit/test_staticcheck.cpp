#include <doctest.h>

#include "../support/harness.hpp"
#include "../support/oracles.hpp"
#include "scpl/parser.hpp"
#include "scpl/staticcheck.hpp"

using namespace scpl;

namespace {

CheckedProgram checked(const std::string& src) { return check_program(parse_program(src)); }

std::size_t count_kind(const CheckedProgram& cp, Violation::Kind k) {
    std::size_t n = 0;
    for (const auto& v : cp.diagnostics) n += v.kind == k;
    return n;
}

const std::vector<Term> kUniverse{Term::number(0), Term::number(1), Term::name("ann")};

}  // namespace

TEST_CASE("fixture pairs are flagged with witnesses") {
    CheckedProgram cp = load_program(harness::source_path("tests/fixtures/nd_violations.scpl"));
    REQUIRE(cp.diagnostics.size() == 3);
    std::vector<std::pair<int, int>> lines;
    for (const auto& v : cp.diagnostics) {
        CHECK(v.kind == Violation::Kind::ExplicitND);
        REQUIRE(v.witness);
        REQUIRE(v.posts.size() == 2);
        CHECK(v.posts[0] != v.posts[1]);
        REQUIRE(v.spans.size() == 2);
        lines.push_back({v.spans[0].line, v.spans[1].line});
    }
    CHECK(lines == std::vector<std::pair<int, int>>{{6, 8}, {11, 13}, {18, 19}});
}

TEST_CASE("corpus is explicitly nondeterministic") {
    for (const auto& name : harness::corpus_names()) {
        CAPTURE(name);
        CHECK(load_program(harness::source_path("corpus/" + name + ".scpl")).diagnostics.empty());
    }
}

TEST_CASE("symbolic check agrees with ground enumeration") {
    auto agree = [](const CheckedProgram& cp) {
        for (const auto& role : cp.program.roles) {
            CAPTURE(role.name);
            bool symbolic = !check_explicit_nd({role}).empty();
            bool brute = !oracle::brute_nd(role, kUniverse, "self").empty();
            CHECK(symbolic == brute);
        }
    };
    for (const auto& name : harness::corpus_names()) agree(load_program(harness::source_path("corpus/" + name + ".scpl")));
    CheckedProgram fx = load_program(harness::source_path("tests/fixtures/nd_violations.scpl"));
    agree(fx);
    std::size_t pairs = 0;
    for (const auto& role : fx.program.roles) pairs += oracle::brute_nd(role, kUniverse, "self").size();
    CHECK(pairs == 3);
}

TEST_CASE("role validation") {
    CHECK(count_kind(checked("activation [a#foo].\nx --> x.\n"), Violation::Kind::UnknownRole) == 1);
    CHECK(count_kind(checked("activation [a#x].\nx(1) --> x(2).\n"), Violation::Kind::MissingInitRule) == 1);
    CHECK(count_kind(checked("activation [a#x].\nx --> x(Q) where Q > Z.\n"), Violation::Kind::UnboundConditionVar) ==
          2);
    // Parameterized activation needs no bare init rule.
    CHECK(checked("activation [a#x(1)].\nx(N) --> tick, x(N).\n").clean());
}

TEST_CASE("combined rules split through an intermediate state") {
    CheckedProgram cp = checked("activation [a#x].\nx, U(m) --> n(U), x.\n");
    const auto& rules = cp.program.roles.at(0).rules;
    REQUIRE(rules.size() == 2);
    CHECK(rules[0].input);
    CHECK_FALSE(rules[0].output);
    CHECK(render(rules[0].post) == "x1(U)");
    CHECK(rules[1].reactive);
    CHECK(rules[1].signed_output);
    CHECK(render(rules[1].pre) == "x1(U)");
}

TEST_CASE("intermediate names avoid names in use") {
    Program p = parse_program("x --> x1.\nx1 --> x.\n");
    IntermediateNames names(p);
    CHECK(names.next() == "x2");
    CHECK(names.next() == "x3");
}

TEST_CASE("ground instances evaluate conditions") {
    Program p = parse_program("x, U(m(V)) --> y(U, V) where V > 0.\n");
    auto g = ground_instances(p.roles[0].rules[0], kUniverse, "self");
    REQUIRE(g.size() == 1);
    CHECK(render(g[0].pre) == "x");
    CHECK(g[0].input->str() == "ann(m(1))");
    CHECK(render(g[0].post) == "y(ann,1)");
}

TEST_CASE("diagnostic formats") {
    CheckedProgram cp = load_program(harness::source_path("tests/fixtures/nd_violations.scpl"));
    std::string text = format_diagnostic("f.scpl", cp.diagnostics[0]);
    CHECK(text.rfind("f.scpl:6:1: ExplicitND: ", 0) == 0);
    std::string json = format_diagnostic_json("f.scpl", cp.diagnostics[0]);
    CHECK(json.find("\"witness\"") != std::string::npos);
}
