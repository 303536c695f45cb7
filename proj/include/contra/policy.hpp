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

// Policy language: `minimize(e)` rank expressions over path attributes
// and regular path tests.
//
//   pol  ::= minimize(e)
//   e    ::= n | inf | path.util | path.len | path.lat | e + e | e - e | e * e
//          | if b then e else e | (e1, ..., en)
//   b    ::= r | e <= e | e < e | not b | b or b | b and b
//   r    ::= node_id | . | r + r | r r | r*
//
// `.` matches exactly one node. Identifiers inside a regex that are not
// node names are split into a sequence of node names (`ABD` is `A B D`).

#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contra/rational.hpp"

namespace contra {

struct SourceLoc {
    int line = 1;
    int column = 1;
};

class PolicyError : public std::runtime_error {
public:
    PolicyError(const std::string& what, SourceLoc loc)
        : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + what),
          loc_(loc) {}
    SourceLoc loc() const { return loc_; }

private:
    SourceLoc loc_;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Attr : std::uint8_t { util = 0, len = 1, lat = 2 };
constexpr int kNumAttrs = 3;
const char* attr_name(Attr a);

// ---------------------------------------------------------------- regex

struct Regex;
using RegexPtr = std::shared_ptr<const Regex>;

struct Regex {
    enum class Kind : std::uint8_t { node, any, alt, concat, star };
    Kind kind = Kind::any;
    std::string node;  // Kind::node
    RegexPtr lhs;      // alt, concat, star
    RegexPtr rhs;      // alt, concat

    static RegexPtr make_node(std::string name);
    static RegexPtr make_any();
    static RegexPtr make_alt(RegexPtr a, RegexPtr b);
    static RegexPtr make_concat(RegexPtr a, RegexPtr b);
    static RegexPtr make_star(RegexPtr a);
};

bool regex_equal(const Regex& a, const Regex& b);
std::string regex_to_string(const Regex& r);
void collect_regex_nodes(const Regex& r, std::set<std::string>& out);

// ---------------------------------------------------------------- expressions

struct Expr;
struct Test;
using ExprPtr = std::shared_ptr<const Expr>;
using TestPtr = std::shared_ptr<const Test>;

struct Expr {
    enum class Kind : std::uint8_t { constant, infinity, attr, binop, cond, tuple };
    Kind kind = Kind::constant;
    Rational value;              // constant
    Attr attr = Attr::util;      // attr
    char op = '+';               // binop: '+', '-', '*'
    TestPtr test;                // cond
    std::vector<ExprPtr> items;  // binop: {lhs, rhs}; cond: {then, else}; tuple: components
    SourceLoc loc;
};

struct Test {
    enum class Kind : std::uint8_t { regex, le, lt, negate, any_of, all_of };
    Kind kind = Kind::regex;
    RegexPtr regex;             // regex
    std::size_t regex_id = 0;   // index into Policy::regexes
    ExprPtr lhs, rhs;           // le, lt
    TestPtr a, b;               // negate (a), any_of/all_of (a, b)
    SourceLoc loc;
};

bool expr_equal(const Expr& a, const Expr& b);
bool test_equal(const Test& a, const Test& b);

/// Parsed `minimize(e)` policy.
struct Policy {
    ExprPtr root;
    /// Distinct regexes in source order; Test::regex_id indexes this list.
    std::vector<RegexPtr> regexes;
    /// Rank arity after padding; 1 when the policy has no tuples.
    std::size_t arity = 1;
    std::string source;
};

/// Regex verdicts, bit i set iff Policy::regexes[i] matches the path.
using VerdictMask = std::uint64_t;
constexpr std::size_t kMaxRegexes = 64;

/// Parses policy text. `alphabet` holds the topology node names.
/// Throws PolicyError with line/column on syntax errors, unknown node
/// names, nested tuples, and tuples inside comparisons or arithmetic.
Policy parse_policy(std::string_view text, const std::vector<std::string>& alphabet);

/// Canonical source form; re-parsing it yields a structurally equal AST.
std::string print_policy(const Policy& policy);
std::string print_expr(const Expr& e);
std::string print_test(const Test& t);

bool policy_equal(const Policy& a, const Policy& b);

/// Ordered, deduplicated regexes of the policy.
const std::vector<RegexPtr>& collect_regexes(const Policy& policy);

// ---------------------------------------------------------------- ranks

/// Lexicographically ordered rank; every policy yields a fixed arity.
struct RankValue {
    std::vector<Extended> components;

    bool is_infinite() const;
    std::string str() const;

    friend bool operator==(const RankValue&, const RankValue&) = default;
};

std::strong_ordering compare_rank(const RankValue& a, const RankValue& b);

struct PathAttributes {
    Rational util;          // max link utilization in [0, 1]
    std::int64_t len = 0;   // hops
    Rational lat;           // microseconds

    Rational get(Attr a) const;
    friend bool operator==(const PathAttributes&, const PathAttributes&) = default;
};

struct EvalFlags {
    /// Set when a subtraction went negative and was clamped to zero.
    bool clamped = false;
};

RankValue evaluate_rank(const Policy& policy, const PathAttributes& attrs, VerdictMask verdicts,
                        EvalFlags* flags = nullptr);

/// Evaluates a sub-expression (padded to `arity`).
RankValue evaluate_expr(const Expr& e, const PathAttributes& attrs, VerdictMask verdicts,
                        std::size_t arity, EvalFlags* flags = nullptr);

bool evaluate_test(const Test& t, const PathAttributes& attrs, VerdictMask verdicts, EvalFlags* flags = nullptr);

/// Attributes referenced anywhere in the expression, guards included.
std::set<Attr> attributes_used(const Expr& e);

/// True unless every dynamic branch reachable under `verdicts` is infinite.
bool can_be_finite(const Expr& e, VerdictMask verdicts);

}  // namespace contra
