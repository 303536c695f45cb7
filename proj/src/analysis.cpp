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

#include "contra/analysis.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace contra {

PathAttributes extend(const PathAttributes& a, const LinkSample& link) {
    PathAttributes out = a;
    if (link.util > out.util) out.util = link.util;
    out.len += 1;
    out.lat = out.lat + link.lat;
    return out;
}

namespace {

std::string attrs_str(const PathAttributes& a) {
    return "{util=" + a.util.str() + ", len=" + std::to_string(a.len) + ", lat=" + a.lat.str() + "}";
}

}  // namespace

std::string Counterexample::str() const {
    std::ostringstream os;
    os << "verdicts=" << verdicts << " a=" << attrs_str(a);
    if (!before_b.components.empty()) os << " b=" << attrs_str(b);
    os << " link={util=" << link.util.str() << ", lat=" << link.lat.str() << "}";
    os << " f(a)=" << before_a.str();
    if (!before_b.components.empty()) os << " f(b)=" << before_b.str();
    os << " f(a+l)=" << after_a.str();
    if (!after_b.components.empty()) os << " f(b+l)=" << after_b.str();
    return os.str();
}

// ---------------------------------------------------------------- falsifiers

namespace {

class Sampler {
public:
    Sampler(std::uint64_t seed, std::size_t num_regexes) : rng_(seed), num_regexes_(num_regexes) {}

    PathAttributes attrs() {
        PathAttributes a;
        a.util = util();
        a.len = pick(0, 8);
        a.lat = Rational(pick(0, 16) * 125);  // k/8 ms in microseconds
        return a;
    }

    LinkSample link() { return LinkSample{util(), Rational(pick(1, 16) * 125)}; }

    // Extremes are oversampled: some witnesses need a path that is exactly
    // idle against one that is exactly saturated.
    Rational util() { return pick(0, 3) == 0 ? Rational(pick(0, 1)) : Rational(pick(0, 16), 16); }

    VerdictMask verdicts() {
        if (num_regexes_ == 0) return 0;
        VerdictMask v = rng_();
        if (num_regexes_ < 64) v &= (VerdictMask{1} << num_regexes_) - 1;
        return v;
    }

private:
    std::int64_t pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::mt19937_64 rng_;
    std::size_t num_regexes_;
};

}  // namespace

std::optional<Counterexample> check_isotone_witness(const Expr& e, std::size_t arity, VerdictMask verdicts,
                                                    const PathAttributes& a, const PathAttributes& b,
                                                    const LinkSample& link) {
    try {
        Counterexample c;
        c.verdicts = verdicts;
        c.a = a;
        c.b = b;
        c.link = link;
        c.before_a = evaluate_expr(e, a, verdicts, arity);
        c.before_b = evaluate_expr(e, b, verdicts, arity);
        if (compare_rank(c.before_a, c.before_b) > 0) {
            std::swap(c.a, c.b);
            std::swap(c.before_a, c.before_b);
        }
        c.after_a = evaluate_expr(e, extend(c.a, link), verdicts, arity);
        c.after_b = evaluate_expr(e, extend(c.b, link), verdicts, arity);
        if (compare_rank(c.after_a, c.after_b) > 0) return c;
        // Equal ranks constrain both orders.
        if (compare_rank(c.before_a, c.before_b) == 0 && compare_rank(c.after_b, c.after_a) > 0) {
            std::swap(c.a, c.b);
            std::swap(c.before_a, c.before_b);
            std::swap(c.after_a, c.after_b);
            return c;
        }
    } catch (const EvalError&) {
    }
    return std::nullopt;
}

std::optional<Counterexample> falsify_isotone(const Expr& e, std::size_t arity, std::size_t num_regexes,
                                              const FalsifierOptions& opts) {
    Sampler s(opts.seed, num_regexes);
    for (int i = 0; i < opts.samples; ++i) {
        VerdictMask v = s.verdicts();
        PathAttributes a = s.attrs();
        PathAttributes b = s.attrs();
        LinkSample l = s.link();
        if (auto c = check_isotone_witness(e, arity, v, a, b, l)) return c;
    }
    return std::nullopt;
}

std::optional<Counterexample> falsify_monotone(const Expr& e, std::size_t arity, std::size_t num_regexes,
                                               const FalsifierOptions& opts) {
    Sampler s(opts.seed ^ 0x9e3779b97f4a7c15ULL, num_regexes);
    for (int i = 0; i < opts.samples; ++i) {
        VerdictMask v = s.verdicts();
        PathAttributes a = s.attrs();
        LinkSample l = s.link();
        try {
            Counterexample c;
            c.verdicts = v;
            c.a = a;
            c.link = l;
            c.before_a = evaluate_expr(e, a, v, arity);
            c.after_a = evaluate_expr(e, extend(a, l), v, arity);
            if (compare_rank(c.after_a, c.before_a) < 0) return c;
        } catch (const EvalError&) {
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- structural checks

namespace {

bool test_is_dynamic(const Test& t) {
    switch (t.kind) {
        case Test::Kind::regex: return false;
        case Test::Kind::le:
        case Test::Kind::lt: return true;
        case Test::Kind::negate: return test_is_dynamic(*t.a);
        case Test::Kind::any_of:
        case Test::Kind::all_of: return test_is_dynamic(*t.a) || test_is_dynamic(*t.b);
    }
    return false;
}

// Shape of a scalar under extension, as a bit set. Constants are 0.
constexpr unsigned kUtil = 1, kAdditive = 2, kOther = 4;

class IsotoneChecker {
public:
    explicit IsotoneChecker(const Policy& p) : policy_(p) {}

    void check_rank(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::cond:
                if (test_is_dynamic(*e.test))
                    add(e, "branch on a path-dependent comparison");
                check_rank(*e.items[0]);
                check_rank(*e.items[1]);
                return;
            case Expr::Kind::tuple: {
                std::vector<unsigned> shapes;
                for (const auto& c : e.items) shapes.push_back(classify(*c));
                for (std::size_t i = 0; i < shapes.size(); ++i) {
                    if (shapes[i] & kOther) {
                        add(*e.items[i], "component is neither additive nor a utilization bottleneck");
                        continue;
                    }
                    if (!(shapes[i] & kUtil)) continue;
                    for (std::size_t j = i + 1; j < shapes.size(); ++j) {
                        if (shapes[j] != 0) {
                            add(e, "utilization component followed by a non-constant component",
                                tuple_witness(e, i, j));
                            return;
                        }
                    }
                }
                return;
            }
            default:
                if (classify(e) & kOther) add(e, "expression is neither additive nor a utilization bottleneck");
        }
    }

    std::vector<Violation> violations;

private:
    unsigned classify(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::constant:
            case Expr::Kind::infinity: return 0;
            case Expr::Kind::attr: return e.attr == Attr::util ? kUtil : kAdditive;
            case Expr::Kind::binop: {
                unsigned a = classify(*e.items[0]);
                unsigned b = classify(*e.items[1]);
                if (e.op == '-') return (a | b) == 0 ? 0 : kOther;
                if (a == 0) return b;
                if (b == 0) return a;
                if (e.op == '+' && a == kAdditive && b == kAdditive) return kAdditive;
                return kOther;
            }
            case Expr::Kind::cond:
                if (test_is_dynamic(*e.test)) {
                    add(e, "branch on a path-dependent comparison");
                    return kOther;
                }
                return classify(*e.items[0]) | classify(*e.items[1]);
            case Expr::Kind::tuple: return kOther;
        }
        return kOther;
    }

    // The bottleneck saturates on a shared congested link while the later
    // component keeps its difference.
    std::optional<Counterexample> tuple_witness(const Expr& e, std::size_t, std::size_t) {
        PathAttributes a{Rational(1, 10), 5, Rational(500)};
        PathAttributes b{Rational(2, 10), 1, Rational(100)};
        LinkSample l{Rational(3, 10), Rational(125)};
        for (VerdictMask v : {VerdictMask{0}, ~VerdictMask{0}})
            if (auto c = check_isotone_witness(e, policy_.arity, v, a, b, l)) return c;
        return std::nullopt;
    }

    void add(const Expr& e, const std::string& reason, std::optional<Counterexample> cex = std::nullopt) {
        Violation v;
        v.property = "isotone";
        v.loc = e.loc;
        v.locus = print_expr(e);
        v.reason = reason;
        v.counterexample = std::move(cex);
        violations.push_back(std::move(v));
    }

    const Policy& policy_;
};

void find_subtractions(const Expr& e, std::vector<Violation>& out);

void find_subtractions(const Test& t, std::vector<Violation>& out) {
    if (t.lhs) find_subtractions(*t.lhs, out);
    if (t.rhs) find_subtractions(*t.rhs, out);
    if (t.a) find_subtractions(*t.a, out);
    if (t.b) find_subtractions(*t.b, out);
}

void find_subtractions(const Expr& e, std::vector<Violation>& out) {
    if (e.kind == Expr::Kind::binop && e.op == '-') {
        Violation v;
        v.property = "monotone";
        v.loc = e.loc;
        v.locus = print_expr(e);
        v.reason = "subtraction can decrease the rank of a longer path";
        out.push_back(std::move(v));
    }
    if (e.test) find_subtractions(*e.test, out);
    for (const auto& it : e.items) find_subtractions(*it, out);
}

}  // namespace

AnalysisReport check_monotone(const Policy& policy, const FalsifierOptions& opts) {
    AnalysisReport r;
    find_subtractions(*policy.root, r.violations);
    if (!r.violations.empty())
        r.warnings.push_back("subtraction results are clamped at 0");
    if (opts.samples > 0) {
        if (auto c = falsify_monotone(*policy.root, policy.arity, policy.regexes.size(), opts)) {
            if (r.violations.empty()) {
                Violation v;
                v.property = "monotone";
                v.loc = policy.root->loc;
                v.locus = print_expr(*policy.root);
                v.reason = "rank decreased under extension";
                v.counterexample = c;
                r.violations.push_back(std::move(v));
            } else if (!r.violations.front().counterexample) {
                r.violations.front().counterexample = c;
            }
        }
    }
    r.monotone = r.violations.empty();
    return r;
}

AnalysisReport check_isotone(const Policy& policy, const FalsifierOptions& opts) {
    AnalysisReport r;
    IsotoneChecker checker(policy);
    checker.check_rank(*policy.root);
    r.violations = std::move(checker.violations);
    if (opts.samples > 0) {
        if (auto c = falsify_isotone(*policy.root, policy.arity, policy.regexes.size(), opts)) {
            if (r.violations.empty()) {
                Violation v;
                v.property = "isotone";
                v.loc = policy.root->loc;
                v.locus = print_expr(*policy.root);
                v.reason = "order not preserved under extension";
                v.counterexample = c;
                r.violations.push_back(std::move(v));
            } else {
                auto it = std::find_if(r.violations.begin(), r.violations.end(),
                                       [](const Violation& v) { return !v.counterexample; });
                bool have = std::any_of(r.violations.begin(), r.violations.end(),
                                        [](const Violation& v) { return v.counterexample.has_value(); });
                if (!have && it != r.violations.end()) it->counterexample = c;
            }
        }
    }
    r.isotone = r.violations.empty();
    return r;
}

AnalysisReport analyze(const Policy& policy, const FalsifierOptions& opts) {
    AnalysisReport m = check_monotone(policy, opts);
    AnalysisReport i = check_isotone(policy, opts);
    AnalysisReport r;
    r.monotone = m.monotone;
    r.isotone = i.isotone;
    r.violations = std::move(m.violations);
    r.violations.insert(r.violations.end(), i.violations.begin(), i.violations.end());
    r.warnings = std::move(m.warnings);
    r.warnings.insert(r.warnings.end(), i.warnings.begin(), i.warnings.end());
    return r;
}

// ---------------------------------------------------------------- decomposition

namespace {

struct DTree;
using DTreePtr = std::shared_ptr<const DTree>;

// Conditionals hoisted to the top; leaves are conditional-free.
struct DTree {
    TestPtr test;  // null for a leaf
    DTreePtr then_t, else_t;
    ExprPtr leaf;
};

DTreePtr make_leaf(ExprPtr e) {
    auto t = std::make_shared<DTree>();
    t->leaf = std::move(e);
    return t;
}

DTreePtr make_branch(TestPtr test, DTreePtr a, DTreePtr b) {
    auto t = std::make_shared<DTree>();
    t->test = std::move(test);
    t->then_t = std::move(a);
    t->else_t = std::move(b);
    return t;
}

DTreePtr combine(const DTreePtr& a, const DTreePtr& b, const std::function<ExprPtr(ExprPtr, ExprPtr)>& fn) {
    if (a->test) return make_branch(a->test, combine(a->then_t, b, fn), combine(a->else_t, b, fn));
    if (b->test) return make_branch(b->test, combine(a, b->then_t, fn), combine(a, b->else_t, fn));
    return make_leaf(fn(a->leaf, b->leaf));
}

DTreePtr lift(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::constant:
        case Expr::Kind::infinity:
        case Expr::Kind::attr: return make_leaf(e);
        case Expr::Kind::cond: return make_branch(e->test, lift(e->items[0]), lift(e->items[1]));
        case Expr::Kind::binop: {
            auto base = e;
            return combine(lift(e->items[0]), lift(e->items[1]), [base](ExprPtr x, ExprPtr y) {
                auto n = std::make_shared<Expr>(*base);
                n->items = {std::move(x), std::move(y)};
                return ExprPtr(n);
            });
        }
        case Expr::Kind::tuple: {
            auto partial = std::make_shared<Expr>(*e);
            partial->items.clear();
            DTreePtr acc = make_leaf(partial);
            for (const auto& item : e->items) {
                acc = combine(acc, lift(item), [](ExprPtr tup, ExprPtr c) {
                    auto n = std::make_shared<Expr>(*tup);
                    n->items.push_back(std::move(c));
                    return ExprPtr(n);
                });
            }
            return acc;
        }
    }
    return make_leaf(e);
}

void leaves(const DTreePtr& t, std::vector<ExprPtr>& out) {
    if (!t->test) {
        out.push_back(t->leaf);
        return;
    }
    leaves(t->then_t, out);
    leaves(t->else_t, out);
}

// Linear form over attributes; fails on products of attributes and on
// subtraction (clamping is not linear).
struct Linear {
    std::map<Attr, Rational> coeff;
    Rational constant;
};

std::optional<Linear> linearize(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::constant: return Linear{{}, e.value};
        case Expr::Kind::attr: return Linear{{{e.attr, Rational(1)}}, Rational(0)};
        case Expr::Kind::binop: {
            auto a = linearize(*e.items[0]);
            auto b = linearize(*e.items[1]);
            if (!a || !b || e.op == '-') return std::nullopt;
            if (e.op == '+') {
                for (auto& [k, v] : b->coeff) a->coeff[k] = a->coeff[k] + v;
                a->constant = a->constant + b->constant;
                return a;
            }
            const Linear* scalar = a->coeff.empty() ? &*a : (b->coeff.empty() ? &*b : nullptr);
            if (!scalar) return std::nullopt;
            Linear out = scalar == &*a ? *b : *a;
            for (auto& [k, v] : out.coeff) v = v * scalar->constant;
            out.constant = out.constant * scalar->constant;
            return out;
        }
        default: return std::nullopt;
    }
}

// Representative of the order a scalar induces on paths.
std::string canonical_scalar(const Expr& e) {
    if (auto lin = linearize(e)) {
        std::vector<std::pair<Attr, Rational>> terms;
        for (const auto& [k, v] : lin->coeff)
            if (!v.is_zero()) terms.emplace_back(k, v);
        if (terms.empty()) return "";
        bool has_util = std::any_of(terms.begin(), terms.end(), [](const auto& t) { return t.first == Attr::util; });
        if (!has_util || terms.size() == 1) {
            Rational scale = terms.front().second;
            std::string out;
            for (const auto& [k, v] : terms) out += std::string(attr_name(k)) + "*" + (v / scale).str() + ";";
            return out;
        }
    }
    return print_expr(e);
}

std::string canonical_leaf(const Expr& leaf) {
    if (leaf.kind != Expr::Kind::tuple) return canonical_scalar(leaf);
    std::string out;
    for (const auto& c : leaf.items) {
        std::string s = canonical_scalar(*c);
        if (!s.empty()) out += "(" + s + ")";
    }
    return out;
}

}  // namespace

bool Decomposition::any_pareto() const {
    return std::any_of(subpolicies.begin(), subpolicies.end(), [](const Subpolicy& s) { return s.pareto; });
}

Decomposition decompose(const Policy& policy, const AnalysisReport& report) {
    if (!report.monotone) {
        std::string where;
        for (const auto& v : report.violations)
            if (v.property == "monotone") {
                where = std::to_string(v.loc.line) + ":" + std::to_string(v.loc.column) + ": " + v.reason;
                break;
            }
        throw DecompositionError("policy is not monotone" + (where.empty() ? "" : " (" + where + ")"));
    }
    Decomposition d;
    d.recombine = policy;
    d.carried_attrs = attributes_used(*policy.root);

    std::vector<ExprPtr> all;
    leaves(lift(policy.root), all);

    std::vector<std::string> keys;
    ExprPtr first_finite;
    for (const auto& leaf : all) {
        if (!can_be_finite(*leaf, 0)) continue;
        if (!first_finite) first_finite = leaf;
        std::string key = canonical_leaf(*leaf);
        if (key.empty()) continue;  // constant leaf: any path in its tag is optimal
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
        keys.push_back(key);
        Subpolicy sp;
        sp.pid = static_cast<int>(d.subpolicies.size());
        sp.branch_rank = leaf;
        sp.order_attrs = attributes_used(*leaf);
        Policy single = policy;
        single.root = leaf;
        IsotoneChecker checker(single);
        checker.check_rank(*leaf);
        sp.pareto = !checker.violations.empty();
        d.subpolicies.push_back(std::move(sp));
    }
    if (d.subpolicies.empty()) {
        Subpolicy sp;
        sp.pid = 0;
        sp.branch_rank = first_finite ? first_finite : policy.root;
        d.subpolicies.push_back(std::move(sp));
    }
    return d;
}

std::string format_report(const Policy& policy, const AnalysisReport& report, const Decomposition* dec) {
    std::ostringstream os;
    os << "policy=" << print_policy(policy) << '\n';
    os << "arity=" << policy.arity << '\n';
    os << "regexes=" << policy.regexes.size() << '\n';
    for (std::size_t i = 0; i < policy.regexes.size(); ++i)
        os << "regex." << i << '=' << regex_to_string(*policy.regexes[i]) << '\n';
    os << "monotone=" << (report.monotone ? "true" : "false") << '\n';
    os << "isotone=" << (report.isotone ? "true" : "false") << '\n';
    os << "violations=" << report.violations.size() << '\n';
    for (std::size_t i = 0; i < report.violations.size(); ++i) {
        const auto& v = report.violations[i];
        std::string p = "violation." + std::to_string(i) + ".";
        os << p << "property=" << v.property << '\n';
        os << p << "loc=" << v.loc.line << ':' << v.loc.column << '\n';
        os << p << "locus=" << v.locus << '\n';
        os << p << "reason=" << v.reason << '\n';
        if (v.counterexample) os << p << "counterexample=" << v.counterexample->str() << '\n';
    }
    for (std::size_t i = 0; i < report.warnings.size(); ++i) os << "warning." << i << '=' << report.warnings[i] << '\n';
    if (dec) {
        os << "pids=" << dec->subpolicies.size() << '\n';
        for (const auto& sp : dec->subpolicies) {
            std::string p = "pid." + std::to_string(sp.pid) + ".";
            os << p << "rank=" << print_expr(*sp.branch_rank) << '\n';
            os << p << "pareto=" << (sp.pareto ? "true" : "false") << '\n';
        }
        os << "carried_attrs=";
        bool first = true;
        for (Attr a : dec->carried_attrs) {
            os << (first ? "" : ",") << attr_name(a);
            first = false;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace contra
