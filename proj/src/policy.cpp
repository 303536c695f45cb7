/*
 * Copyright 2026 The Contra Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "contra/policy.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace contra {

const char* attr_name(Attr a) {
    switch (a) {
        case Attr::util: return "util";
        case Attr::len: return "len";
        case Attr::lat: return "lat";
    }
    return "?";
}

// ---------------------------------------------------------------- regex helpers

RegexPtr Regex::make_node(std::string name) {
    auto r = std::make_shared<Regex>();
    r->kind = Kind::node;
    r->node = std::move(name);
    return r;
}

RegexPtr Regex::make_any() {
    auto r = std::make_shared<Regex>();
    r->kind = Kind::any;
    return r;
}

RegexPtr Regex::make_alt(RegexPtr a, RegexPtr b) {
    auto r = std::make_shared<Regex>();
    r->kind = Kind::alt;
    r->lhs = std::move(a);
    r->rhs = std::move(b);
    return r;
}

RegexPtr Regex::make_concat(RegexPtr a, RegexPtr b) {
    auto r = std::make_shared<Regex>();
    r->kind = Kind::concat;
    r->lhs = std::move(a);
    r->rhs = std::move(b);
    return r;
}

RegexPtr Regex::make_star(RegexPtr a) {
    auto r = std::make_shared<Regex>();
    r->kind = Kind::star;
    r->lhs = std::move(a);
    return r;
}

bool regex_equal(const Regex& a, const Regex& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Regex::Kind::node: return a.node == b.node;
        case Regex::Kind::any: return true;
        case Regex::Kind::star: return regex_equal(*a.lhs, *b.lhs);
        case Regex::Kind::alt:
        case Regex::Kind::concat: return regex_equal(*a.lhs, *b.lhs) && regex_equal(*a.rhs, *b.rhs);
    }
    return false;
}

namespace {

// 0: alt, 1: concat, 2: star/atom
int regex_prec(const Regex& r) {
    switch (r.kind) {
        case Regex::Kind::alt: return 0;
        case Regex::Kind::concat: return 1;
        default: return 2;
    }
}

void print_regex(const Regex& r, std::ostream& os) {
    auto child = [&os](const Regex& c, int min_prec) {
        if (regex_prec(c) < min_prec) {
            os << '(';
            print_regex(c, os);
            os << ')';
        } else {
            print_regex(c, os);
        }
    };
    switch (r.kind) {
        case Regex::Kind::node: os << r.node; break;
        case Regex::Kind::any: os << '.'; break;
        case Regex::Kind::star:
            child(*r.lhs, 2);
            os << '*';
            break;
        case Regex::Kind::concat:
            child(*r.lhs, 1);
            os << ' ';
            child(*r.rhs, 2 - (r.rhs->kind == Regex::Kind::concat ? 0 : 1));
            break;
        case Regex::Kind::alt:
            child(*r.lhs, 0);
            os << " + ";
            child(*r.rhs, 1);
            break;
    }
}

}  // namespace

std::string regex_to_string(const Regex& r) {
    std::ostringstream os;
    print_regex(r, os);
    return os.str();
}

void collect_regex_nodes(const Regex& r, std::set<std::string>& out) {
    switch (r.kind) {
        case Regex::Kind::node: out.insert(r.node); break;
        case Regex::Kind::any: break;
        case Regex::Kind::star: collect_regex_nodes(*r.lhs, out); break;
        case Regex::Kind::alt:
        case Regex::Kind::concat:
            collect_regex_nodes(*r.lhs, out);
            collect_regex_nodes(*r.rhs, out);
            break;
    }
}

// ---------------------------------------------------------------- structural equality

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::constant: return a.value == b.value;
        case Expr::Kind::infinity: return true;
        case Expr::Kind::attr: return a.attr == b.attr;
        case Expr::Kind::binop:
            if (a.op != b.op) return false;
            break;
        case Expr::Kind::cond:
            if (!test_equal(*a.test, *b.test)) return false;
            break;
        case Expr::Kind::tuple: break;
    }
    if (a.items.size() != b.items.size()) return false;
    for (std::size_t i = 0; i < a.items.size(); ++i)
        if (!expr_equal(*a.items[i], *b.items[i])) return false;
    return true;
}

bool test_equal(const Test& a, const Test& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Test::Kind::regex: return regex_equal(*a.regex, *b.regex);
        case Test::Kind::le:
        case Test::Kind::lt: return expr_equal(*a.lhs, *b.lhs) && expr_equal(*a.rhs, *b.rhs);
        case Test::Kind::negate: return test_equal(*a.a, *b.a);
        case Test::Kind::any_of:
        case Test::Kind::all_of: return test_equal(*a.a, *b.a) && test_equal(*a.b, *b.b);
    }
    return false;
}

bool policy_equal(const Policy& a, const Policy& b) {
    if (a.regexes.size() != b.regexes.size() || a.arity != b.arity) return false;
    for (std::size_t i = 0; i < a.regexes.size(); ++i)
        if (!regex_equal(*a.regexes[i], *b.regexes[i])) return false;
    return expr_equal(*a.root, *b.root);
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok {
    ident, number, attr,
    kw_minimize, kw_if, kw_then, kw_else, kw_not, kw_and, kw_or, kw_inf,
    lparen, rparen, comma, plus, minus, star, dot, le, lt, end
};

struct Token {
    Tok kind = Tok::end;
    std::string text;
    SourceLoc loc;
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::ident: return "identifier";
        case Tok::number: return "number";
        case Tok::attr: return "path attribute";
        case Tok::kw_minimize: return "'minimize'";
        case Tok::kw_if: return "'if'";
        case Tok::kw_then: return "'then'";
        case Tok::kw_else: return "'else'";
        case Tok::kw_not: return "'not'";
        case Tok::kw_and: return "'and'";
        case Tok::kw_or: return "'or'";
        case Tok::kw_inf: return "'inf'";
        case Tok::lparen: return "'('";
        case Tok::rparen: return "')'";
        case Tok::comma: return "','";
        case Tok::plus: return "'+'";
        case Tok::minus: return "'-'";
        case Tok::star: return "'*'";
        case Tok::dot: return "'.'";
        case Tok::le: return "'<='";
        case Tok::lt: return "'<'";
        case Tok::end: return "end of input";
    }
    return "?";
}

bool is_ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    SourceLoc loc;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            unsigned char c = static_cast<unsigned char>(src[i]);
            if (c == '\n') {
                ++loc.line;
                loc.column = 1;
            } else if ((c & 0xC0) != 0x80) {
                ++loc.column;  // count code points, not bytes
            }
        }
    };
    auto push = [&](Tok k, std::string text, SourceLoc at) { out.push_back(Token{k, std::move(text), at}); };

    while (i < src.size()) {
        char c = src[i];
        SourceLoc at = loc;
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {  // comment to end of line
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (src.substr(i, 3) == "\xE2\x88\x9E") {  // U+221E infinity
            push(Tok::kw_inf, "inf", at);
            advance(3);
            continue;
        }
        if (src.substr(i, 3) == "\xE2\x89\xA4") {  // U+2264 less-than or equal
            push(Tok::le, "<=", at);
            advance(3);
            continue;
        }
        if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
            std::size_t j = i;
            while (j < src.size() && (is_digit(src[j]) || src[j] == '.')) ++j;
            push(Tok::number, std::string(src.substr(i, j - i)), at);
            advance(j - i);
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) ++j;
            std::string word(src.substr(i, j - i));
            if (word == "path" && j + 1 < src.size() && src[j] == '.' && is_ident_start(src[j + 1])) {
                std::size_t k = j + 1;
                while (k < src.size() && is_ident_char(src[k])) ++k;
                push(Tok::attr, std::string(src.substr(j + 1, k - j - 1)), at);
                advance(k - i);
                continue;
            }
            Tok kind = Tok::ident;
            if (word == "minimize") kind = Tok::kw_minimize;
            else if (word == "if") kind = Tok::kw_if;
            else if (word == "then") kind = Tok::kw_then;
            else if (word == "else") kind = Tok::kw_else;
            else if (word == "not") kind = Tok::kw_not;
            else if (word == "and") kind = Tok::kw_and;
            else if (word == "or") kind = Tok::kw_or;
            else if (word == "inf" || word == "infinity") kind = Tok::kw_inf;
            push(kind, word, at);
            advance(j - i);
            continue;
        }
        switch (c) {
            case '(': push(Tok::lparen, "(", at); break;
            case ')': push(Tok::rparen, ")", at); break;
            case ',': push(Tok::comma, ",", at); break;
            case '+': push(Tok::plus, "+", at); break;
            case '-': push(Tok::minus, "-", at); break;
            case '*': push(Tok::star, "*", at); break;
            case '.': push(Tok::dot, ".", at); break;
            case '<':
                if (i + 1 < src.size() && src[i + 1] == '=') {
                    push(Tok::le, "<=", at);
                    advance(2);
                    continue;
                }
                push(Tok::lt, "<", at);
                break;
            default:
                throw PolicyError(std::string("unexpected character '") + c + "'", at);
        }
        advance(1);
    }
    out.push_back(Token{Tok::end, "", loc});
    return out;
}

// ---------------------------------------------------------------- parser

class Parser {
public:
    Parser(std::vector<Token> toks, const std::vector<std::string>& alphabet)
        : toks_(std::move(toks)), alphabet_(alphabet.begin(), alphabet.end()) {}

    ExprPtr parse_policy() {
        expect(Tok::kw_minimize);
        expect(Tok::lparen);
        ExprPtr e = parse_expr();
        expect(Tok::rparen);
        expect(Tok::end);
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    bool at(Tok k) const { return peek().kind == k; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const { throw PolicyError(msg, peek().loc); }

    const Token& expect(Tok k) {
        if (!at(k))
            fail(std::string("expected ") + tok_name(k) + ", found " + tok_name(peek().kind) +
                 (peek().text.empty() ? "" : " '" + peek().text + "'"));
        return next();
    }

    static bool contains_tuple(const Expr& e) {
        if (e.kind == Expr::Kind::tuple) return true;
        if (e.kind == Expr::Kind::cond) return contains_tuple(*e.items[0]) || contains_tuple(*e.items[1]);
        return false;
    }

    // expr := 'if' test 'then' expr 'else' expr | additive
    ExprPtr parse_expr() {
        if (at(Tok::kw_if)) return parse_if();
        return parse_additive();
    }

    ExprPtr parse_if() {
        SourceLoc loc = expect(Tok::kw_if).loc;
        TestPtr t = parse_test();
        expect(Tok::kw_then);
        ExprPtr then_e = parse_expr();
        expect(Tok::kw_else);
        ExprPtr else_e = parse_expr();
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::cond;
        e->test = std::move(t);
        e->items = {std::move(then_e), std::move(else_e)};
        e->loc = loc;
        return e;
    }

    ExprPtr make_binop(char op, ExprPtr a, ExprPtr b, SourceLoc loc) {
        if (contains_tuple(*a) || contains_tuple(*b))
            throw PolicyError("tuple used in arithmetic", loc);
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::binop;
        e->op = op;
        e->items = {std::move(a), std::move(b)};
        e->loc = loc;
        return e;
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        while (at(Tok::plus) || at(Tok::minus)) {
            const Token& op = next();
            ExprPtr rhs = parse_multiplicative();
            lhs = make_binop(op.kind == Tok::plus ? '+' : '-', lhs, rhs, op.loc);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_primary();
        while (at(Tok::star)) {
            const Token& op = next();
            ExprPtr rhs = parse_primary();
            lhs = make_binop('*', lhs, rhs, op.loc);
        }
        return lhs;
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        auto e = std::make_shared<Expr>();
        e->loc = t.loc;
        switch (t.kind) {
            case Tok::number:
                next();
                try {
                    e->kind = Expr::Kind::constant;
                    e->value = Rational::parse(t.text);
                } catch (const std::exception& ex) {
                    throw PolicyError(ex.what(), t.loc);
                }
                return e;
            case Tok::kw_inf:
                next();
                e->kind = Expr::Kind::infinity;
                return e;
            case Tok::attr:
                next();
                e->kind = Expr::Kind::attr;
                if (t.text == "util") e->attr = Attr::util;
                else if (t.text == "len") e->attr = Attr::len;
                else if (t.text == "lat") e->attr = Attr::lat;
                else throw PolicyError("unknown path attribute 'path." + t.text + "'", t.loc);
                return e;
            case Tok::kw_if:
                return parse_if();
            case Tok::lparen: {
                next();
                std::vector<ExprPtr> items;
                items.push_back(parse_expr());
                while (at(Tok::comma)) {
                    next();
                    items.push_back(parse_expr());
                }
                expect(Tok::rparen);
                if (items.size() == 1) return items.front();
                for (const auto& it : items)
                    if (contains_tuple(*it)) throw PolicyError("nested tuple", it->loc);
                e->kind = Expr::Kind::tuple;
                e->items = std::move(items);
                return e;
            }
            default:
                fail(std::string("expected an expression, found ") + tok_name(t.kind) +
                     (t.text.empty() ? "" : " '" + t.text + "'"));
        }
    }

    // test := or_test
    TestPtr parse_test() { return parse_or(); }

    TestPtr parse_or() {
        TestPtr lhs = parse_and();
        while (at(Tok::kw_or)) {
            SourceLoc loc = next().loc;
            auto t = std::make_shared<Test>();
            t->kind = Test::Kind::any_of;
            t->a = lhs;
            t->b = parse_and();
            t->loc = loc;
            lhs = t;
        }
        return lhs;
    }

    TestPtr parse_and() {
        TestPtr lhs = parse_not();
        while (at(Tok::kw_and)) {
            SourceLoc loc = next().loc;
            auto t = std::make_shared<Test>();
            t->kind = Test::Kind::all_of;
            t->a = lhs;
            t->b = parse_not();
            t->loc = loc;
            lhs = t;
        }
        return lhs;
    }

    TestPtr parse_not() {
        if (at(Tok::kw_not)) {
            SourceLoc loc = next().loc;
            auto t = std::make_shared<Test>();
            t->kind = Test::Kind::negate;
            t->a = parse_not();
            t->loc = loc;
            return t;
        }
        return parse_atom_test();
    }

    // Tries, in order: comparison, regex, parenthesized test. Reports the
    // error of the alternative that got furthest.
    TestPtr parse_atom_test() {
        const std::size_t start = pos_;
        std::optional<PolicyError> best;
        std::size_t best_pos = 0;
        auto remember = [&](const PolicyError& err) {
            if (!best || pos_ >= best_pos) {
                best = err;
                best_pos = pos_;
            }
            pos_ = start;
        };

        try {
            return parse_comparison();
        } catch (const PolicyError& err) {
            if (fatal_) throw;
            remember(err);
        }
        try {
            SourceLoc loc = peek().loc;
            RegexPtr r = parse_regex_union();
            auto t = std::make_shared<Test>();
            t->kind = Test::Kind::regex;
            t->regex = std::move(r);
            t->loc = loc;
            return t;
        } catch (const PolicyError& err) {
            if (fatal_) throw;
            remember(err);
        }
        if (at(Tok::lparen)) {
            try {
                next();
                TestPtr inner = parse_test();
                expect(Tok::rparen);
                return inner;
            } catch (const PolicyError& err) {
                if (fatal_) throw;
                remember(err);
            }
        }
        throw *best;
    }

    TestPtr parse_comparison() {
        SourceLoc loc = peek().loc;
        ExprPtr lhs = parse_additive();
        Test::Kind kind;
        if (at(Tok::le)) kind = Test::Kind::le;
        else if (at(Tok::lt)) kind = Test::Kind::lt;
        else fail("expected '<=' or '<' in comparison");
        next();
        ExprPtr rhs = parse_additive();
        // Past the operator this is definitely a comparison.
        if (contains_tuple(*lhs) || contains_tuple(*rhs)) {
            fatal_ = true;
            throw PolicyError("tuple inside comparison", loc);
        }
        auto t = std::make_shared<Test>();
        t->kind = kind;
        t->lhs = std::move(lhs);
        t->rhs = std::move(rhs);
        t->loc = loc;
        return t;
    }

    bool at_regex_atom() const {
        return at(Tok::ident) || at(Tok::dot) || at(Tok::lparen);
    }

    RegexPtr parse_regex_union() {
        RegexPtr lhs = parse_regex_concat();
        while (at(Tok::plus)) {
            next();
            lhs = Regex::make_alt(lhs, parse_regex_concat());
        }
        return lhs;
    }

    RegexPtr parse_regex_concat() {
        if (!at_regex_atom()) fail(std::string("expected a path regex, found ") + tok_name(peek().kind));
        RegexPtr lhs = parse_regex_star();
        while (at_regex_atom()) lhs = Regex::make_concat(lhs, parse_regex_star());
        return lhs;
    }

    RegexPtr parse_regex_star() {
        RegexPtr r = parse_regex_atom();
        while (at(Tok::star)) {
            next();
            r = Regex::make_star(r);
        }
        return r;
    }

    RegexPtr parse_regex_atom() {
        const Token& t = peek();
        if (t.kind == Tok::dot) {
            next();
            return Regex::make_any();
        }
        if (t.kind == Tok::lparen) {
            next();
            RegexPtr r = parse_regex_union();
            expect(Tok::rparen);
            return r;
        }
        if (t.kind == Tok::ident) {
            next();
            return resolve_identifier(t);
        }
        fail(std::string("expected a path regex, found ") + tok_name(t.kind));
    }

    // Whole-name match first, otherwise the longest-first split into
    // alphabet symbols.
    RegexPtr resolve_identifier(const Token& t) {
        if (alphabet_.count(t.text)) return Regex::make_node(t.text);
        std::vector<std::string> parts;
        std::function<bool(std::size_t)> split = [&](std::size_t from) -> bool {
            if (from == t.text.size()) return true;
            for (std::size_t len = t.text.size() - from; len >= 1; --len) {
                std::string piece = t.text.substr(from, len);
                if (alphabet_.count(piece)) {
                    parts.push_back(piece);
                    if (split(from + len)) return true;
                    parts.pop_back();
                }
            }
            return false;
        };
        if (!split(0)) {
            fatal_ = true;
            throw PolicyError("unknown node id '" + t.text + "' in regex", t.loc);
        }
        RegexPtr r = Regex::make_node(parts.front());
        for (std::size_t i = 1; i < parts.size(); ++i) r = Regex::make_concat(r, Regex::make_node(parts[i]));
        return r;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::unordered_set<std::string> alphabet_;
    bool fatal_ = false;  // semantic errors are not retried by backtracking
};

// Rebuilds tests so regex leaves carry dense ids in source order.
class RegexIndexer {
public:
    explicit RegexIndexer(std::vector<RegexPtr>& out) : out_(out) {}

    ExprPtr expr(const ExprPtr& e) {
        if (e->kind == Expr::Kind::constant || e->kind == Expr::Kind::infinity || e->kind == Expr::Kind::attr)
            return e;
        auto copy = std::make_shared<Expr>(*e);
        if (copy->test) copy->test = test(copy->test);
        for (auto& it : copy->items) it = expr(it);
        return copy;
    }

    TestPtr test(const TestPtr& t) {
        auto copy = std::make_shared<Test>(*t);
        switch (t->kind) {
            case Test::Kind::regex: {
                auto it = std::find_if(out_.begin(), out_.end(),
                                       [&](const RegexPtr& r) { return regex_equal(*r, *t->regex); });
                if (it == out_.end()) {
                    if (out_.size() >= kMaxRegexes) throw PolicyError("too many distinct regexes", t->loc);
                    out_.push_back(t->regex);
                    copy->regex_id = out_.size() - 1;
                } else {
                    copy->regex_id = static_cast<std::size_t>(it - out_.begin());
                    copy->regex = *it;
                }
                break;
            }
            case Test::Kind::le:
            case Test::Kind::lt:
                copy->lhs = expr(t->lhs);
                copy->rhs = expr(t->rhs);
                break;
            case Test::Kind::negate: copy->a = test(t->a); break;
            case Test::Kind::any_of:
            case Test::Kind::all_of:
                copy->a = test(t->a);
                copy->b = test(t->b);
                break;
        }
        return copy;
    }

private:
    std::vector<RegexPtr>& out_;
};

std::size_t max_arity(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::tuple: return e.items.size();
        case Expr::Kind::cond: return std::max(max_arity(*e.items[0]), max_arity(*e.items[1]));
        default: return 1;
    }
}

}  // namespace

Policy parse_policy(std::string_view text, const std::vector<std::string>& alphabet) {
    if (alphabet.empty()) throw PolicyError("empty node alphabet", SourceLoc{});
    Parser parser(tokenize(text), alphabet);
    Policy p;
    p.source = std::string(text);
    RegexIndexer indexer(p.regexes);
    p.root = indexer.expr(parser.parse_policy());
    p.arity = max_arity(*p.root);
    return p;
}

const std::vector<RegexPtr>& collect_regexes(const Policy& policy) {
    return policy.regexes;
}

// ---------------------------------------------------------------- printing

namespace {

// 0: if, 1: + -, 2: *, 3: primary
int expr_prec(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::cond: return 0;
        case Expr::Kind::binop: return e.op == '*' ? 2 : 1;
        default: return 3;
    }
}

void print_expr_to(const Expr& e, std::ostream& os);
void print_test_to(const Test& t, std::ostream& os);

void print_child(const Expr& c, int min_prec, std::ostream& os) {
    if (expr_prec(c) < min_prec) {
        os << '(';
        print_expr_to(c, os);
        os << ')';
    } else {
        print_expr_to(c, os);
    }
}

void print_expr_to(const Expr& e, std::ostream& os) {
    switch (e.kind) {
        case Expr::Kind::constant: os << e.value.str(); break;
        case Expr::Kind::infinity: os << "inf"; break;
        case Expr::Kind::attr: os << "path." << attr_name(e.attr); break;
        case Expr::Kind::binop: {
            int p = expr_prec(e);
            print_child(*e.items[0], p, os);
            os << ' ' << e.op << ' ';
            print_child(*e.items[1], p + 1, os);
            break;
        }
        case Expr::Kind::cond:
            os << "if ";
            print_test_to(*e.test, os);
            os << " then ";
            print_child(*e.items[0], 1, os);
            os << " else ";
            print_expr_to(*e.items[1], os);
            break;
        case Expr::Kind::tuple:
            os << '(';
            for (std::size_t i = 0; i < e.items.size(); ++i) {
                if (i) os << ", ";
                print_expr_to(*e.items[i], os);
            }
            os << ')';
            break;
    }
}

// 0: or, 1: and, 2: not/atom
int test_prec(const Test& t) {
    switch (t.kind) {
        case Test::Kind::any_of: return 0;
        case Test::Kind::all_of: return 1;
        default: return 2;
    }
}

void print_test_child(const Test& t, int min_prec, std::ostream& os) {
    if (test_prec(t) < min_prec || t.kind == Test::Kind::regex) {
        os << '(';
        print_test_to(t, os);
        os << ')';
    } else {
        print_test_to(t, os);
    }
}

void print_test_to(const Test& t, std::ostream& os) {
    switch (t.kind) {
        case Test::Kind::regex: os << regex_to_string(*t.regex); break;
        case Test::Kind::le:
        case Test::Kind::lt:
            print_expr_to(*t.lhs, os);
            os << (t.kind == Test::Kind::le ? " <= " : " < ");
            print_expr_to(*t.rhs, os);
            break;
        case Test::Kind::negate:
            os << "not ";
            print_test_child(*t.a, 2, os);
            break;
        case Test::Kind::any_of:
            print_test_child(*t.a, 0, os);
            os << " or ";
            print_test_child(*t.b, 1, os);
            break;
        case Test::Kind::all_of:
            print_test_child(*t.a, 1, os);
            os << " and ";
            print_test_child(*t.b, 2, os);
            break;
    }
}

}  // namespace

std::string print_expr(const Expr& e) {
    std::ostringstream os;
    print_expr_to(e, os);
    return os.str();
}

std::string print_test(const Test& t) {
    std::ostringstream os;
    print_test_to(t, os);
    return os.str();
}

std::string print_policy(const Policy& policy) {
    return "minimize(" + print_expr(*policy.root) + ")";
}

// ---------------------------------------------------------------- ranks

bool RankValue::is_infinite() const {
    return std::any_of(components.begin(), components.end(), [](const Extended& e) { return e.inf; });
}

std::string RankValue::str() const {
    std::string out = "(";
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (i) out += ", ";
        out += components[i].str();
    }
    return out + ")";
}

std::strong_ordering compare_rank(const RankValue& a, const RankValue& b) {
    if (a.components.size() != b.components.size())
        throw std::logic_error("rank arity mismatch: " + a.str() + " vs " + b.str());
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        auto c = a.components[i] <=> b.components[i];
        if (c != 0) return c;
    }
    return std::strong_ordering::equal;
}

Rational PathAttributes::get(Attr a) const {
    switch (a) {
        case Attr::util: return util;
        case Attr::len: return Rational(len);
        case Attr::lat: return lat;
    }
    return Rational(0);
}

namespace {

Extended eval_scalar(const Expr& e, const PathAttributes& attrs, VerdictMask verdicts, EvalFlags* flags) {
    switch (e.kind) {
        case Expr::Kind::constant: return Extended::finite(e.value);
        case Expr::Kind::infinity: return Extended::infinity();
        case Expr::Kind::attr: return Extended::finite(attrs.get(e.attr));
        case Expr::Kind::binop: {
            Extended a = eval_scalar(*e.items[0], attrs, verdicts, flags);
            Extended b = eval_scalar(*e.items[1], attrs, verdicts, flags);
            switch (e.op) {
                case '+':
                    if (a.inf || b.inf) return Extended::infinity();
                    return Extended::finite(a.value + b.value);
                case '*':
                    if (a.inf || b.inf) return Extended::infinity();
                    return Extended::finite(a.value * b.value);
                case '-': {
                    if (b.inf) throw EvalError("subtracting infinity");
                    if (a.inf) return Extended::infinity();
                    Rational r = a.value - b.value;
                    if (r.is_negative()) {
                        if (flags) flags->clamped = true;
                        r = Rational(0);
                    }
                    return Extended::finite(r);
                }
                default: throw EvalError(std::string("unknown operator ") + e.op);
            }
        }
        case Expr::Kind::cond:
            return eval_scalar(*e.items[evaluate_test(*e.test, attrs, verdicts, flags) ? 0 : 1], attrs, verdicts,
                               flags);
        case Expr::Kind::tuple: throw EvalError("tuple in scalar context");
    }
    throw EvalError("bad expression");
}

}  // namespace

bool evaluate_test(const Test& t, const PathAttributes& attrs, VerdictMask verdicts, EvalFlags* flags) {
    switch (t.kind) {
        case Test::Kind::regex: return (verdicts >> t.regex_id) & 1U;
        case Test::Kind::le:
            return eval_scalar(*t.lhs, attrs, verdicts, flags) <= eval_scalar(*t.rhs, attrs, verdicts, flags);
        case Test::Kind::lt:
            return eval_scalar(*t.lhs, attrs, verdicts, flags) < eval_scalar(*t.rhs, attrs, verdicts, flags);
        case Test::Kind::negate: return !evaluate_test(*t.a, attrs, verdicts, flags);
        case Test::Kind::any_of:
            return evaluate_test(*t.a, attrs, verdicts, flags) || evaluate_test(*t.b, attrs, verdicts, flags);
        case Test::Kind::all_of:
            return evaluate_test(*t.a, attrs, verdicts, flags) && evaluate_test(*t.b, attrs, verdicts, flags);
    }
    return false;
}

RankValue evaluate_expr(const Expr& e, const PathAttributes& attrs, VerdictMask verdicts, std::size_t arity,
                        EvalFlags* flags) {
    const Expr* cur = &e;
    while (cur->kind == Expr::Kind::cond)
        cur = cur->items[evaluate_test(*cur->test, attrs, verdicts, flags) ? 0 : 1].get();
    RankValue out;
    out.components.reserve(arity);
    if (cur->kind == Expr::Kind::tuple) {
        for (const auto& item : cur->items) out.components.push_back(eval_scalar(*item, attrs, verdicts, flags));
    } else {
        out.components.push_back(eval_scalar(*cur, attrs, verdicts, flags));
    }
    while (out.components.size() < arity) out.components.push_back(Extended::finite(Rational(0)));
    return out;
}

RankValue evaluate_rank(const Policy& policy, const PathAttributes& attrs, VerdictMask verdicts, EvalFlags* flags) {
    return evaluate_expr(*policy.root, attrs, verdicts, policy.arity, flags);
}

namespace {

void attrs_of_test(const Test& t, std::set<Attr>& out);

void attrs_of_expr(const Expr& e, std::set<Attr>& out) {
    if (e.kind == Expr::Kind::attr) out.insert(e.attr);
    if (e.test) attrs_of_test(*e.test, out);
    for (const auto& it : e.items) attrs_of_expr(*it, out);
}

void attrs_of_test(const Test& t, std::set<Attr>& out) {
    if (t.lhs) attrs_of_expr(*t.lhs, out);
    if (t.rhs) attrs_of_expr(*t.rhs, out);
    if (t.a) attrs_of_test(*t.a, out);
    if (t.b) attrs_of_test(*t.b, out);
}

// Three-valued evaluation of a test when only regex verdicts are known.
std::optional<bool> static_test(const Test& t, VerdictMask verdicts) {
    switch (t.kind) {
        case Test::Kind::regex: return ((verdicts >> t.regex_id) & 1U) != 0;
        case Test::Kind::le:
        case Test::Kind::lt: return std::nullopt;
        case Test::Kind::negate: {
            auto v = static_test(*t.a, verdicts);
            if (v) return !*v;
            return std::nullopt;
        }
        case Test::Kind::any_of: {
            auto a = static_test(*t.a, verdicts);
            auto b = static_test(*t.b, verdicts);
            if ((a && *a) || (b && *b)) return true;
            if (a && b) return false;
            return std::nullopt;
        }
        case Test::Kind::all_of: {
            auto a = static_test(*t.a, verdicts);
            auto b = static_test(*t.b, verdicts);
            if ((a && !*a) || (b && !*b)) return false;
            if (a && b) return true;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

std::set<Attr> attributes_used(const Expr& e) {
    std::set<Attr> out;
    attrs_of_expr(e, out);
    return out;
}

bool can_be_finite(const Expr& e, VerdictMask verdicts) {
    switch (e.kind) {
        case Expr::Kind::constant:
        case Expr::Kind::attr: return true;
        case Expr::Kind::infinity: return false;
        case Expr::Kind::binop:
            // inf - x is inf; x - inf is an error, not a finite rank.
            return can_be_finite(*e.items[0], verdicts) && can_be_finite(*e.items[1], verdicts);
        case Expr::Kind::cond: {
            auto v = static_test(*e.test, verdicts);
            if (v) return can_be_finite(*e.items[*v ? 0 : 1], verdicts);
            return can_be_finite(*e.items[0], verdicts) || can_be_finite(*e.items[1], verdicts);
        }
        case Expr::Kind::tuple:
            return std::all_of(e.items.begin(), e.items.end(),
                               [&](const ExprPtr& c) { return can_be_finite(*c, verdicts); });
    }
    return true;
}

}  // namespace contra
