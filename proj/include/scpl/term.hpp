#pragma once

#include "scpl/decimal.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace scpl {

/// Immutable logic term. Copies share structure.
class Term {
public:
    enum class Kind : std::uint8_t { Var, Name, Number, Compound };

    Term();  // the name `[]`

    static Term var(std::string name);
    static Term name(std::string text);
    static Term number(Decimal value);
    static Term compound(std::string functor, std::vector<Term> args);

    static Term nil();
    static Term cons(Term head, Term tail);
    static Term list(const std::vector<Term>& items, Term tail = nil());

    Kind kind() const { return n_->kind; }
    bool is_var() const { return kind() == Kind::Var; }
    bool is_name() const { return kind() == Kind::Name; }
    bool is_number() const { return kind() == Kind::Number; }
    bool is_compound() const { return kind() == Kind::Compound; }
    bool is_nil() const { return is_name() && n_->text == "[]"; }
    bool is_cons() const { return is_compound() && n_->args.size() == 2 && n_->text == "."; }

    /// Variable name, name text, or functor.
    const std::string& text() const { return n_->text; }
    const Decimal& value() const { return n_->num; }
    std::span<const Term> args() const { return n_->args; }
    const Term& arg(std::size_t i) const { return n_->args[i]; }
    std::size_t arity() const { return n_->args.size(); }

    bool ground() const { return n_->ground; }
    std::size_t hash() const { return n_->hash; }
    bool same_node(const Term& o) const { return n_ == o.n_; }

    friend bool operator==(const Term& a, const Term& b);
    friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }
    static int compare(const Term& a, const Term& b);

private:
    struct Node {
        Kind kind;
        std::string text;
        Decimal num;
        std::vector<Term> args;
        bool ground;
        std::size_t hash;
    };
    explicit Term(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
    static Term make(Kind k, std::string text, Decimal num, std::vector<Term> args);

    std::shared_ptr<const Node> n_;
};

using Substitution = std::map<std::string, Term>;

/// Canonical text: names verbatim (double-quoted when not a bare name),
/// `[a,b|T]` lists, `A#B` for spawn/activation pairs.
std::string render(const Term& t);
std::string render(const Substitution& s);
std::ostream& operator<<(std::ostream& os, const Term& t);

/// True when `text` can be written without quotes.
bool is_bare_name(std::string_view text);

bool is_ground(const Term& t);
Term substitute(const Term& t, const Substitution& theta);

/// One-way matching of `pattern` against ground `value`, extending `seed`.
std::optional<Substitution> match(const Term& pattern, const Term& value, Substitution seed = {});

/// Most general unifier with occurs check. The result is idempotent.
std::optional<Substitution> unify(const Term& a, const Term& b);
/// Extends an existing (idempotent) unifier.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& seed);

/// Variables of t in order of first appearance, deduplicated.
void collect_vars(const Term& t, std::vector<std::string>& out);
std::vector<std::string> vars_of(const Term& t);

/// Source of names never produced before. Generated variables look like
/// `_G<n>`; the lexer refuses that spelling in source text.
class FreshNames {
public:
    explicit FreshNames(std::string prefix = "_G") : prefix_(std::move(prefix)) {}
    std::string next();

private:
    std::string prefix_;
    std::uint64_t counter_ = 0;
};

/// Consistent renaming of every variable to a fresh one. `renaming` is
/// shared across calls so several terms can be renamed together.
Term rename_fresh(const Term& t, FreshNames& fresh, Substitution& renaming);
Term rename_fresh(const Term& t, FreshNames& fresh);

/// Signer side of an act pattern.
struct ActPattern {
    enum class Signer : std::uint8_t { Var, Name, Wildcard };
    Signer signer_kind = Signer::Wildcard;
    std::string signer;  // variable or agent name; empty for Wildcard
    Term payload;

    static ActPattern wildcard(Term payload) { return {Signer::Wildcard, {}, std::move(payload)}; }
    static ActPattern by_var(std::string v, Term payload) { return {Signer::Var, std::move(v), std::move(payload)}; }
    static ActPattern by_name(std::string n, Term payload) { return {Signer::Name, std::move(n), std::move(payload)}; }

    bool ground() const { return signer_kind == Signer::Name && payload.ground(); }
    /// `Signer(payload)`, `_(payload)` for the wildcard.
    std::string str() const;
};

/// Matches an act pattern against a ground signed act.
std::optional<Substitution> match(const ActPattern& p, const std::string& signer, const Term& payload,
                                  Substitution seed = {});

ActPattern substitute(const ActPattern& p, const Substitution& theta);

}  // namespace scpl
