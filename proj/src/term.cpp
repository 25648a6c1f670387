#include "scpl/term.hpp"

#include <functional>
#include <sstream>
#include <utility>

namespace scpl {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace

Term Term::make(Kind k, std::string text, Decimal num, std::vector<Term> args) {
    bool ground = k != Kind::Var;
    std::size_t h = mix(static_cast<std::size_t>(k), std::hash<std::string>{}(text));
    if (k == Kind::Number) h = mix(h, num.hash());
    for (const auto& a : args) {
        ground = ground && a.ground();
        h = mix(h, a.hash());
    }
    return Term(std::make_shared<const Node>(Node{k, std::move(text), std::move(num), std::move(args), ground, h}));
}

Term::Term() : Term(nil()) {}

Term Term::var(std::string name) { return make(Kind::Var, std::move(name), {}, {}); }
Term Term::name(std::string text) { return make(Kind::Name, std::move(text), {}, {}); }
Term Term::number(Decimal value) { return make(Kind::Number, {}, std::move(value), {}); }
Term Term::compound(std::string functor, std::vector<Term> args) {
    if (args.empty()) return name(std::move(functor));
    return make(Kind::Compound, std::move(functor), {}, std::move(args));
}

Term Term::nil() {
    static const Term n = make(Kind::Name, "[]", {}, {});
    return n;
}

Term Term::cons(Term head, Term tail) { return compound(".", {std::move(head), std::move(tail)}); }

Term Term::list(const std::vector<Term>& items, Term tail) {
    Term t = std::move(tail);
    for (auto it = items.rbegin(); it != items.rend(); ++it) t = cons(*it, t);
    return t;
}

bool operator==(const Term& a, const Term& b) {
    if (a.n_ == b.n_) return true;
    if (a.n_->hash != b.n_->hash || a.n_->kind != b.n_->kind) return false;
    if (a.n_->kind == Term::Kind::Number) return a.n_->num == b.n_->num;
    if (a.n_->text != b.n_->text || a.n_->args.size() != b.n_->args.size()) return false;
    for (std::size_t i = 0; i < a.n_->args.size(); ++i)
        if (!(a.n_->args[i] == b.n_->args[i])) return false;
    return true;
}

int Term::compare(const Term& a, const Term& b) {
    if (a.n_ == b.n_) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    if (a.kind() == Kind::Number) {
        auto c = a.value() <=> b.value();
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (a.arity() != b.arity()) return a.arity() < b.arity() ? -1 : 1;
    if (int c = a.text().compare(b.text()); c != 0) return c < 0 ? -1 : 1;
    for (std::size_t i = 0; i < a.arity(); ++i)
        if (int c = compare(a.arg(i), b.arg(i)); c != 0) return c;
    return 0;
}

bool is_bare_name(std::string_view s) {
    if (s == "[]") return true;
    if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
    for (char c : s)
        if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')) return false;
    return true;
}

namespace {

void render_name(std::ostringstream& os, const std::string& s) {
    if (is_bare_name(s)) {
        os << s;
        return;
    }
    os << '"';
    for (char c : s) {
        if (c == '"' || c == '\\') os << '\\';
        os << c;
    }
    os << '"';
}

void render_into(std::ostringstream& os, const Term& t) {
    switch (t.kind()) {
        case Term::Kind::Var: os << t.text(); return;
        case Term::Kind::Name: render_name(os, t.text()); return;
        case Term::Kind::Number: os << t.value().str(); return;
        case Term::Kind::Compound: break;
    }
    if (t.is_cons()) {
        os << '[';
        Term cur = t;
        bool first = true;
        while (cur.is_cons()) {
            if (!first) os << ',';
            render_into(os, cur.arg(0));
            first = false;
            cur = cur.arg(1);
        }
        if (!cur.is_nil()) {
            os << '|';
            render_into(os, cur);
        }
        os << ']';
        return;
    }
    if (t.text() == "#" && t.arity() == 2) {
        render_into(os, t.arg(0));
        os << '#';
        render_into(os, t.arg(1));
        return;
    }
    render_name(os, t.text());
    os << '(';
    for (std::size_t i = 0; i < t.arity(); ++i) {
        if (i) os << ',';
        render_into(os, t.arg(i));
    }
    os << ')';
}

}  // namespace

std::string render(const Term& t) {
    std::ostringstream os;
    render_into(os, t);
    return os.str();
}

std::string render(const Substitution& s) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [k, v] : s) {
        if (!first) os << ", ";
        first = false;
        os << k << " -> ";
        render_into(os, v);
    }
    os << '}';
    return os.str();
}

std::ostream& operator<<(std::ostream& os, const Term& t) { return os << render(t); }

bool is_ground(const Term& t) { return t.ground(); }

Term substitute(const Term& t, const Substitution& theta) {
    if (t.ground() || theta.empty()) return t;
    if (t.is_var()) {
        auto it = theta.find(t.text());
        return it == theta.end() ? t : it->second;
    }
    std::vector<Term> args;
    args.reserve(t.arity());
    bool changed = false;
    for (const auto& a : t.args()) {
        args.push_back(substitute(a, theta));
        changed = changed || !args.back().same_node(a);
    }
    if (!changed) return t;
    return Term::compound(t.text(), std::move(args));
}

namespace {

bool match_into(const Term& p, const Term& v, Substitution& theta) {
    if (p.ground()) return p == v;
    if (p.is_var()) {
        auto [it, inserted] = theta.emplace(p.text(), v);
        return inserted || it->second == v;
    }
    if (!v.is_compound() || p.text() != v.text() || p.arity() != v.arity()) return false;
    for (std::size_t i = 0; i < p.arity(); ++i)
        if (!match_into(p.arg(i), v.arg(i), theta)) return false;
    return true;
}

// Triangular bindings during unification.
const Term& walk(const Term& t, const Substitution& b) {
    const Term* cur = &t;
    while (cur->is_var()) {
        auto it = b.find(cur->text());
        if (it == b.end()) break;
        cur = &it->second;
    }
    return *cur;
}

bool occurs(const std::string& v, const Term& t, const Substitution& b) {
    const Term& w = walk(t, b);
    if (w.is_var()) return w.text() == v;
    if (w.ground()) return false;
    for (const auto& a : w.args())
        if (occurs(v, a, b)) return true;
    return false;
}

bool unify_into(const Term& x, const Term& y, Substitution& b) {
    const Term& a = walk(x, b);
    const Term& c = walk(y, b);
    if (a.is_var() && c.is_var() && a.text() == c.text()) return true;
    if (a.is_var()) {
        if (occurs(a.text(), c, b)) return false;
        b.emplace(a.text(), c);
        return true;
    }
    if (c.is_var()) {
        if (occurs(c.text(), a, b)) return false;
        b.emplace(c.text(), a);
        return true;
    }
    if (a.ground() && c.ground()) return a == c;
    if (a.kind() != c.kind()) return false;
    if (!a.is_compound()) return a == c;
    if (a.text() != c.text() || a.arity() != c.arity()) return false;
    for (std::size_t i = 0; i < a.arity(); ++i) {
        // Arguments are re-walked inside the recursive call.
        Term ai = a.arg(i), ci = c.arg(i);
        if (!unify_into(ai, ci, b)) return false;
    }
    return true;
}

Term resolve(const Term& t, const Substitution& b) {
    if (t.ground()) return t;
    const Term& w = walk(t, b);
    if (w.is_var() || w.ground()) return w;
    std::vector<Term> args;
    args.reserve(w.arity());
    for (const auto& a : w.args()) args.push_back(resolve(a, b));
    return Term::compound(w.text(), std::move(args));
}

}  // namespace

std::optional<Substitution> match(const Term& pattern, const Term& value, Substitution seed) {
    if (!match_into(pattern, value, seed)) return std::nullopt;
    return seed;
}

std::optional<Substitution> unify(const Term& a, const Term& b) { return unify(a, b, Substitution{}); }

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& seed) {
    Substitution tri = seed;
    if (!unify_into(a, b, tri)) return std::nullopt;
    Substitution out;
    for (const auto& [k, v] : tri) {
        Term r = resolve(v, tri);
        if (!(r.is_var() && r.text() == k)) out.emplace(k, std::move(r));
    }
    return out;
}

void collect_vars(const Term& t, std::vector<std::string>& out) {
    if (t.ground()) return;
    if (t.is_var()) {
        for (const auto& v : out)
            if (v == t.text()) return;
        out.push_back(t.text());
        return;
    }
    for (const auto& a : t.args()) collect_vars(a, out);
}

std::vector<std::string> vars_of(const Term& t) {
    std::vector<std::string> out;
    collect_vars(t, out);
    return out;
}

std::string FreshNames::next() { return prefix_ + std::to_string(++counter_); }

Term rename_fresh(const Term& t, FreshNames& fresh, Substitution& renaming) {
    for (const auto& v : vars_of(t))
        if (!renaming.count(v)) renaming.emplace(v, Term::var(fresh.next()));
    return substitute(t, renaming);
}

Term rename_fresh(const Term& t, FreshNames& fresh) {
    Substitution r;
    return rename_fresh(t, fresh, r);
}

std::string ActPattern::str() const {
    std::string s;
    switch (signer_kind) {
        case Signer::Var: s = signer; break;
        case Signer::Name: s = is_bare_name(signer) ? signer : render(Term::name(signer)); break;
        case Signer::Wildcard: s = "_"; break;
    }
    return s + "(" + render(payload) + ")";
}

std::optional<Substitution> match(const ActPattern& p, const std::string& signer, const Term& payload,
                                  Substitution seed) {
    switch (p.signer_kind) {
        case ActPattern::Signer::Name:
            if (p.signer != signer) return std::nullopt;
            break;
        case ActPattern::Signer::Var: {
            auto [it, inserted] = seed.emplace(p.signer, Term::name(signer));
            if (!inserted && !(it->second == Term::name(signer))) return std::nullopt;
            break;
        }
        case ActPattern::Signer::Wildcard: break;
    }
    return match(p.payload, payload, std::move(seed));
}

ActPattern substitute(const ActPattern& p, const Substitution& theta) {
    ActPattern out = p;
    out.payload = substitute(p.payload, theta);
    if (p.signer_kind == ActPattern::Signer::Var) {
        auto it = theta.find(p.signer);
        if (it != theta.end() && it->second.is_name()) {
            out.signer_kind = ActPattern::Signer::Name;
            out.signer = it->second.text();
        } else if (it != theta.end() && it->second.is_var()) {
            out.signer = it->second.text();
        }
    }
    return out;
}

}  // namespace scpl
