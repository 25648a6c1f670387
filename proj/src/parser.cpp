#include "scpl/parser.hpp"

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>

namespace scpl {

SyntaxError::SyntaxError(int line, int col, std::string message, std::vector<std::string> expected)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + message),
      line_(line),
      col_(col),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::atomic<std::uint64_t> g_anon{0};

enum class Tok {
    Var, Anon, Name, Quoted, Number,
    LParen, RParen, LBrack, RBrack, Bar, Comma, Dot, Hash, Amp,
    Arrow, Assign, Cmp, Plus, Minus, Star, End
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

bool is_reserved_var(const std::string& s) {
    // _G12, _R3: generated spellings
    if (s.size() < 3 || s[0] != '_' || !(s[1] >= 'A' && s[1] <= 'Z')) return false;
    for (std::size_t i = 2; i < s.size(); ++i)
        if (!(s[i] >= '0' && s[i] <= '9')) return false;
    return true;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : s_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip();
            int l = line_, c = col_;
            if (i_ >= s_.size()) {
                out.push_back({Tok::End, "end of input", l, c});
                return out;
            }
            char ch = s_[i_];
            auto single = [&](Tok k) {
                out.push_back({k, std::string(1, ch), l, c});
                adv();
            };
            if (is_upper(ch) || ch == '_') {
                std::string w = word();
                while (i_ < s_.size() && s_[i_] == '\'') {
                    w.push_back('\'');
                    adv();
                }
                if (w == "_") {
                    out.push_back({Tok::Anon, w, l, c});
                } else {
                    if (is_reserved_var(w)) throw SyntaxError(l, c, "variable name " + w + " is reserved");
                    out.push_back({Tok::Var, w, l, c});
                }
            } else if (ch >= 'a' && ch <= 'z') {
                out.push_back({Tok::Name, word(), l, c});
            } else if (is_digit(ch)) {
                std::string n;
                while (i_ < s_.size() && is_digit(s_[i_])) n.push_back(take());
                if (i_ + 1 < s_.size() && s_[i_] == '.' && is_digit(s_[i_ + 1])) {
                    n.push_back(take());
                    while (i_ < s_.size() && is_digit(s_[i_])) n.push_back(take());
                }
                out.push_back({Tok::Number, n, l, c});
            } else if (ch == '"') {
                adv();
                std::string q;
                for (;;) {
                    if (i_ >= s_.size()) throw SyntaxError(l, c, "unterminated quoted name", {"\""});
                    char d = take();
                    if (d == '"') break;
                    if (d == '\\') {
                        if (i_ >= s_.size()) throw SyntaxError(l, c, "unterminated quoted name", {"\""});
                        d = take();
                    }
                    q.push_back(d);
                }
                out.push_back({Tok::Quoted, q, l, c});
            } else if (starts("-->")) {
                out.push_back({Tok::Arrow, "-->", l, c});
                adv(3);
            } else if (starts(":-")) {
                out.push_back({Tok::Arrow, ":-", l, c});
                adv(2);
            } else if (starts(":=")) {
                out.push_back({Tok::Assign, ":=", l, c});
                adv(2);
            } else if (starts("=\\=")) {
                out.push_back({Tok::Cmp, "=\\=", l, c});
                adv(3);
            } else if (starts(">=") || starts("=<")) {
                out.push_back({Tok::Cmp, std::string(s_.substr(i_, 2)), l, c});
                adv(2);
            } else if (ch == '>' || ch == '<' || ch == '=') {
                single(Tok::Cmp);
            } else {
                switch (ch) {
                    case '(': single(Tok::LParen); break;
                    case ')': single(Tok::RParen); break;
                    case '[': single(Tok::LBrack); break;
                    case ']': single(Tok::RBrack); break;
                    case '|': single(Tok::Bar); break;
                    case ',': single(Tok::Comma); break;
                    case '.': single(Tok::Dot); break;
                    case '#': single(Tok::Hash); break;
                    case '&': single(Tok::Amp); break;
                    case '+': single(Tok::Plus); break;
                    case '-': single(Tok::Minus); break;
                    case '*': single(Tok::Star); break;
                    default: throw SyntaxError(l, c, std::string("unexpected character '") + ch + "'");
                }
            }
        }
    }

private:
    static bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_word(char c) {
        return (c >= 'a' && c <= 'z') || is_upper(c) || is_digit(c) || c == '_';
    }
    bool starts(std::string_view p) const { return s_.substr(i_, p.size()) == p; }
    char take() {
        char c = s_[i_];
        adv();
        return c;
    }
    void adv(std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i_ < s_.size(); ++k) {
            if (s_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++i_;
        }
    }
    std::string word() {
        std::string w;
        while (i_ < s_.size() && is_word(s_[i_])) w.push_back(take());
        return w;
    }
    void skip() {
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '%') {
                while (i_ < s_.size() && s_[i_] != '\n') adv();
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                adv();
            } else {
                break;
            }
        }
    }

    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1, col_ = 1;
};

std::string describe(Tok k) {
    switch (k) {
        case Tok::Var: return "variable";
        case Tok::Anon: return "_";
        case Tok::Name: return "name";
        case Tok::Quoted: return "quoted name";
        case Tok::Number: return "number";
        case Tok::LParen: return "(";
        case Tok::RParen: return ")";
        case Tok::LBrack: return "[";
        case Tok::RBrack: return "]";
        case Tok::Bar: return "|";
        case Tok::Comma: return ",";
        case Tok::Dot: return ".";
        case Tok::Hash: return "#";
        case Tok::Amp: return "&";
        case Tok::Arrow: return "-->";
        case Tok::Assign: return ":=";
        case Tok::Cmp: return "comparison";
        case Tok::Plus: return "+";
        case Tok::Minus: return "-";
        case Tok::Star: return "*";
        case Tok::End: return "end of input";
    }
    return "?";
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

    Term whole_term() {
        Term t = term();
        expect(Tok::End);
        return t;
    }

    std::vector<std::pair<std::string, Term>> whole_activation() {
        auto a = activation_list();
        expect(Tok::End);
        return a;
    }

    Program program(std::string source_name) {
        Program p;
        p.source_name = std::move(source_name);
        std::vector<Rule> rules;
        bool have_activation = false;
        while (!at(Tok::End)) {
            if (at(Tok::Name) && peek().text == "activation" && peek(1).kind == Tok::LBrack) {
                if (have_activation) error("only one activation clause is allowed");
                next();
                p.activation = activation_list();
                expect(Tok::Dot);
                have_activation = true;
                continue;
            }
            rules.push_back(rule());
        }
        group_roles(p, std::move(rules));
        return p;
    }

private:
    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool at(Tok k) const { return peek().kind == k; }
    bool at_name(std::string_view w) const { return at(Tok::Name) && peek().text == w; }
    Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    [[noreturn]] void error(const std::string& msg, std::vector<std::string> expected = {}) const {
        throw SyntaxError(peek().line, peek().col, msg, std::move(expected));
    }
    [[noreturn]] void unexpected(std::vector<std::string> expected) const {
        std::string msg = "unexpected " + (at(Tok::End) ? std::string("end of input") : "'" + peek().text + "'");
        if (!expected.empty()) {
            msg += ", expected ";
            for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? " or " : "") + expected[i];
        }
        error(msg, std::move(expected));
    }
    Token expect(Tok k) {
        if (!at(k)) unexpected({describe(k)});
        return next();
    }

    // ---- terms

    Term term() {
        Term t = primary();
        if (at(Tok::Hash)) {
            next();
            Term rhs = primary();
            return Term::compound("#", {t, rhs});
        }
        return t;
    }

    std::vector<Term> args() {
        expect(Tok::LParen);
        std::vector<Term> out{term()};
        while (at(Tok::Comma)) {
            next();
            out.push_back(term());
        }
        expect(Tok::RParen);
        return out;
    }

    Term primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Var: next(); return Term::var(t.text);
            case Tok::Anon: next(); return Term::var("_G" + std::to_string(++g_anon));
            case Tok::Number: next(); return Term::number(*Decimal::parse(t.text));
            case Tok::Minus:
                if (peek(1).kind == Tok::Number) {
                    next();
                    return Term::number(*Decimal::parse("-" + next().text));
                }
                break;
            case Tok::Name:
            case Tok::Quoted: {
                std::string f = next().text;
                if (at(Tok::LParen)) return Term::compound(f, args());
                return Term::name(f);
            }
            case Tok::LBrack: return list();
            default: break;
        }
        unexpected({"term"});
    }

    Term list() {
        expect(Tok::LBrack);
        if (at(Tok::RBrack)) {
            next();
            return Term::nil();
        }
        std::vector<Term> items{term()};
        while (at(Tok::Comma)) {
            next();
            items.push_back(term());
        }
        Term tail = Term::nil();
        if (at(Tok::Bar)) {
            next();
            tail = term();
        }
        if (!at(Tok::RBrack)) unexpected({",", "|", "]"});
        next();
        return Term::list(items, tail);
    }

    // ---- activation

    std::vector<std::pair<std::string, Term>> activation_list() {
        int line = peek().line, col = peek().col;
        Term l = list();
        std::vector<std::pair<std::string, Term>> out;
        std::set<std::string> seen;
        Term cur = l;
        while (cur.is_cons()) {
            const Term& e = cur.arg(0);
            if (!(e.is_compound() && e.text() == "#" && e.arity() == 2 && e.arg(0).is_name() &&
                  (e.arg(1).is_name() || e.arg(1).is_compound()) && e.arg(1).ground()))
                throw SyntaxError(line, col, "activation entries must be name#state with a ground state");
            const std::string& agent = e.arg(0).text();
            if (agent == "autonomous")
                throw SyntaxError(line, col, "agent name autonomous is only allowed inside rule bodies");
            if (!seen.insert(agent).second) throw DuplicateAgent(agent);
            out.emplace_back(agent, e.arg(1));
            cur = cur.arg(1);
        }
        if (!cur.is_nil()) throw SyntaxError(line, col, "activation must be a proper list");
        return out;
    }

    // ---- rules

    ActPattern act_pattern() {
        if ((at(Tok::Var) || at(Tok::Anon)) && peek(1).kind == Tok::LParen) {
            Token s = next();
            expect(Tok::LParen);
            Term payload = term();
            expect(Tok::RParen);
            if (s.kind == Tok::Anon) return ActPattern::wildcard(payload);
            return ActPattern::by_var(s.text, payload);
        }
        Term t = term();
        if (t.is_compound() && t.arity() == 1 && t.text() != "#") return ActPattern::by_name(t.text(), t.arg(0));
        return ActPattern::wildcard(t);
    }

    Rule rule() {
        Rule r;
        r.origin = {peek().line, peek().col};
        r.pre = term();
        if (!(r.pre.is_name() || (r.pre.is_compound() && r.pre.text() != "#")))
            throw SyntaxError(r.origin.line, r.origin.col, "pre-state must be a name or compound term");
        if (at(Tok::Comma)) {
            next();
            r.input = act_pattern();
        }
        if (!at(Tok::Arrow)) unexpected({r.input ? "-->" : "',' or -->"});
        next();

        std::vector<std::pair<Term, SourceSpan>> items;
        auto item = [&] { items.emplace_back(term(), SourceSpan{peek().line, peek().col}); };
        SourceSpan first{peek().line, peek().col};
        item();
        items.back().second = first;
        while (at(Tok::Comma)) {
            next();
            SourceSpan sp{peek().line, peek().col};
            item();
            items.back().second = sp;
        }
        const Term& post = items.back().first;
        if (post.is_var() || post.is_number() || (post.is_compound() && post.text() == "#"))
            throw SyntaxError(items.back().second.line, items.back().second.col, "post-state must be a state term");
        r.post = post;
        for (std::size_t i = 0; i + 1 < items.size(); ++i) {
            const auto& [t, sp] = items[i];
            if (t.is_compound() && t.text() == "#") {
                if (r.spawn) throw SyntaxError(sp.line, sp.col, "at most one spawn per rule");
                if (!(t.arg(0).is_var() || t.arg(0).is_name()))
                    throw SyntaxError(sp.line, sp.col, "spawn target must be a name or variable");
                r.spawn = Spawn{t.arg(0), t.arg(1)};
            } else {
                if (r.output) throw SyntaxError(sp.line, sp.col, "at most one act per rule");
                r.output = t;
            }
        }
        if (at_name("where")) {
            next();
            r.conditions.push_back(condition());
            while (at(Tok::Amp) || at(Tok::Comma)) {
                next();
                r.conditions.push_back(condition());
            }
        }
        if (!at(Tok::Dot)) unexpected({r.conditions.empty() ? "',' or where or ." : "& or ."});
        next();
        check_assign_targets(r);
        return r;
    }

    void check_assign_targets(const Rule& r) const {
        std::vector<std::string> bound = vars_of(r.pre);
        if (r.input) {
            if (r.input->signer_kind == ActPattern::Signer::Var) bound.push_back(r.input->signer);
            collect_vars(r.input->payload, bound);
        }
        for (const auto& c : r.conditions) {
            std::string v = produced_var(c);
            if (v.empty()) continue;
            if (v == "Self") throw SyntaxError(r.origin.line, r.origin.col, "Self cannot be assigned");
            for (const auto& b : bound)
                if (b == v)
                    throw SyntaxError(r.origin.line, r.origin.col,
                                      "assignment target " + v + " is already bound on the left-hand side");
        }
    }

    // ---- conditions

    Condition condition() {
        if ((at_name("append_elem") || at_name("remove_elem")) && peek(1).kind == Tok::LParen) {
            ListOpKind k = next().text == "append_elem" ? ListOpKind::AppendElem : ListOpKind::RemoveElem;
            expect(Tok::LParen);
            Term e = term();
            expect(Tok::Comma);
            Term l = term();
            expect(Tok::Comma);
            Token res = expect(Tok::Var);
            expect(Tok::RParen);
            return ListOp{k, e, l, res.text};
        }
        if (at(Tok::Var) && peek(1).kind == Tok::Assign) {
            std::string v = next().text;
            next();
            std::size_t save = pos_;
            if (auto opts = choice_list()) return AssignChoice{v, std::move(*opts)};
            pos_ = save;
            return Assign{v, expr()};
        }
        Term lhs = expr();
        if (!at(Tok::Cmp)) unexpected({"comparison", ":="});
        std::string op = next().text;
        Term rhs = expr();
        CmpOp o = op == ">"    ? CmpOp::Gt
                  : op == ">=" ? CmpOp::Ge
                  : op == "<"  ? CmpOp::Lt
                  : op == "=<" ? CmpOp::Le
                  : op == "="  ? CmpOp::Eq
                               : CmpOp::Ne;
        return Compare{o, lhs, rhs};
    }

    // `e1, e2, or e3` / `e1 or e2`; nullopt (position undefined) when there is no `or`.
    std::optional<std::vector<Term>> choice_list() {
        std::vector<Term> opts;
        try {
            opts.push_back(expr());
            for (;;) {
                if (at_name("or")) {
                    next();
                    opts.push_back(expr());
                    return opts;
                }
                if (!at(Tok::Comma)) return std::nullopt;
                next();
                if (at_name("or")) {
                    next();
                    opts.push_back(expr());
                    return opts;
                }
                opts.push_back(expr());
            }
        } catch (const SyntaxError&) {
            return std::nullopt;
        }
    }

    Term expr() {
        Term t = mul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            std::string op = next().text;
            t = Term::compound(op, {t, mul()});
        }
        return t;
    }

    Term mul() {
        Term t = unary();
        while (at(Tok::Star)) {
            next();
            t = Term::compound("*", {t, unary()});
        }
        return t;
    }

    Term unary() {
        if (at(Tok::Minus) && peek(1).kind != Tok::Number) {
            next();
            return Term::compound("-", {unary()});
        }
        if (at(Tok::LParen)) {
            next();
            Term t = expr();
            expect(Tok::RParen);
            return t;
        }
        return term();
    }

    // ---- roles

    static void group_roles(Program& p, std::vector<Rule> rules) {
        std::set<std::string> roles;
        for (const auto& r : rules)
            if (r.pre.is_name()) roles.insert(r.pre.text());
        for (const auto& [agent, state] : p.activation) roles.insert(state_functor(state));
        for (const auto& r : rules)
            if (r.spawn) roles.insert(state_functor(r.spawn->state));

        std::string current;
        for (auto& r : rules) {
            std::string f = state_functor(r.pre);
            if (roles.count(f) || current.empty()) current = f;
            RoleProgram* rp = p.role(current);
            if (!rp) {
                p.roles.push_back({current, {}});
                rp = &p.roles.back();
            }
            rp->rules.push_back(std::move(r));
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

Term parse_term(std::string_view text) { return Parser(text).whole_term(); }

Program parse_program(std::string_view text, std::string source_name) {
    return Parser(text).program(std::move(source_name));
}

std::vector<std::pair<std::string, Term>> parse_activation(std::string_view text) {
    return Parser(text).whole_activation();
}

}  // namespace scpl
