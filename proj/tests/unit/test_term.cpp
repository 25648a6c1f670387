#include <doctest.h>

#include "../support/oracles.hpp"
#include "scpl/parser.hpp"
#include "scpl/term.hpp"

#include <random>

using namespace scpl;

namespace {
Term T(const char* s) { return parse_term(s); }
}  // namespace

TEST_CASE("ground terms") {
    CHECK(is_ground(T("f(a, [1, 2], g(b))")));
    CHECK_FALSE(is_ground(T("f(a, X)")));
    CHECK(is_ground(T("[]")));
    CHECK_FALSE(is_ground(T("[a|T]")));
}

TEST_CASE("substitute") {
    Substitution s{{"X", T("a")}, {"Y", T("f(Z)")}};
    CHECK(render(substitute(T("g(X, Y, W)"), s)) == "g(a,f(Z),W)");
    CHECK(substitute(T("k"), s) == T("k"));
    CHECK(render(substitute(T("[X|T]"), s)) == "[a|T]");
}

TEST_CASE("match is one-way") {
    auto m = match(T("reserve(Host)"), T("reserve(ouri)"));
    REQUIRE(m);
    CHECK(m->at("Host") == T("ouri"));
    CHECK_FALSE(match(T("f(X, X)"), T("f(a, b)")));
    CHECK(match(T("f(X, X)"), T("f(a, a)")));
    CHECK_FALSE(match(T("f(a)"), T("f(X)")));
    CHECK_FALSE(match(T("g(X)"), T("f(a)")));
}

TEST_CASE("act pattern match binds the signer variable") {
    auto p = ActPattern::by_var("Tourist", T("reserve(Self)"));
    auto m = match(p, "gal", T("reserve(ouri)"), {{"Self", T("ouri")}});
    REQUIRE(m);
    CHECK(m->at("Tourist") == T("gal"));
    CHECK_FALSE(match(p, "gal", T("reserve(nimrod)"), {{"Self", T("ouri")}}));
    CHECK_FALSE(match(ActPattern::by_name("broker", T("x")), "tom", T("x")));
    CHECK(match(ActPattern::wildcard(T("x")), "tom", T("x")));
}

TEST_CASE("unify") {
    auto u = unify(T("f(X, b)"), T("f(a, Y)"));
    REQUIRE(u);
    CHECK(u->at("X") == T("a"));
    CHECK(u->at("Y") == T("b"));
    CHECK_FALSE(unify(T("X"), T("f(X)")));  // occurs check
    CHECK_FALSE(unify(T("f(a)"), T("f(b)")));
    CHECK(unify(T("X"), T("X"))->empty());
    auto chain = unify(T("f(X, Y, Z)"), T("f(Y, Z, a)"));
    REQUIRE(chain);
    for (const char* v : {"X", "Y", "Z"}) CHECK(chain->at(v) == T("a"));
}

TEST_CASE("numbers compare by value") {
    CHECK(T("1.50") == T("1.5"));
    CHECK(unify(T("f(2.0)"), T("f(2)")));
    CHECK_FALSE(unify(T("f(2)"), T("f(3)")));
}

TEST_CASE("rename_fresh renames consistently") {
    FreshNames fresh("_S");
    Term t = rename_fresh(T("f(X, g(X, Y))"), fresh);
    auto vs = vars_of(t);
    REQUIRE(vs.size() == 2);
    CHECK(vs[0].rfind("_S", 0) == 0);
    CHECK(t.arg(0) == t.arg(1).arg(0));
    CHECK(oracle::instance_of(T("f(a, g(a, b))"), t));
}

TEST_CASE("property: unify agrees with an independent unifier") {
    std::mt19937_64 rng(20240611);
    int solved = 0;
    for (int i = 0; i < 3000; ++i) {
        Term a = oracle::random_term(rng, 3), b = oracle::random_term(rng, 3);
        auto got = unify(a, b);
        auto want = oracle::brute_unify(a, b);
        REQUIRE(got.has_value() == want.has_value());
        if (!got) continue;
        ++solved;
        Term ga = oracle::apply(a, *got), gb = oracle::apply(b, *got);
        CHECK(ga == gb);
        // Idempotent.
        for (const auto& [v, t] : *got) CHECK(oracle::apply(t, *got) == t);
        // Same generality as the reference unifier.
        Term wa = oracle::apply(a, *want);
        CHECK(oracle::instance_of(wa, ga));
        CHECK(oracle::instance_of(ga, wa));
    }
    CHECK(solved > 300);
}

TEST_CASE("property: match succeeds exactly on instances") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 3000; ++i) {
        Term p = oracle::random_term(rng, 3);
        Substitution g{{"X", oracle::random_term(rng, 1)}, {"Y", Term::name("a")}, {"Z", Term::number(0)}};
        for (auto& [k, v] : g)
            if (!v.ground()) v = Term::name("b");
        Term value = i % 3 ? oracle::apply(p, g) : oracle::apply(oracle::random_term(rng, 3), g);
        auto m = match(p, value);
        CHECK(m.has_value() == oracle::instance_of(value, p));
        if (m) CHECK(substitute(p, *m) == value);
    }
}

TEST_CASE("property: render and parse round-trip") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        Term t = oracle::random_term(rng, 4);
        CHECK(parse_term(render(t)) == t);
    }
    for (const char* s : {"[a,b|T]", "a#b", "\"x y\"", "[]", "f([1,2.5],-3)"}) CHECK(render(parse_term(s)) == s);
}
