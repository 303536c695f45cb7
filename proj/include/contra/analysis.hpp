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

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contra/policy.hpp"

namespace contra {

// One link appended to a path: util combines by max, len by +1, lat by sum.
struct LinkSample {
    Rational util;
    Rational lat;  // microseconds
};

PathAttributes extend(const PathAttributes& a, const LinkSample& link);

struct Counterexample {
    VerdictMask verdicts = 0;
    PathAttributes a;
    PathAttributes b;  // unused for monotonicity witnesses
    LinkSample link;
    RankValue before_a, before_b, after_a, after_b;

    std::string str() const;
};

struct Violation {
    std::string property;  // "monotone" or "isotone"
    SourceLoc loc;
    std::string locus;     // printed sub-expression
    std::string reason;
    std::optional<Counterexample> counterexample;
};

struct AnalysisReport {
    bool monotone = true;
    bool isotone = true;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
};

struct FalsifierOptions {
    std::uint64_t seed = 0x5eed;
    int samples = 10'000;
};

AnalysisReport check_monotone(const Policy& policy, const FalsifierOptions& opts = {});
AnalysisReport check_isotone(const Policy& policy, const FalsifierOptions& opts = {});
// Both checks merged into one report.
AnalysisReport analyze(const Policy& policy, const FalsifierOptions& opts = {});

// Random search for f(a) <= f(b) but f(a+l) > f(b+l) with shared verdicts.
std::optional<Counterexample> falsify_isotone(const Expr& e, std::size_t arity, std::size_t num_regexes,
                                              const FalsifierOptions& opts = {});
// Random search for f(a+l) < f(a).
std::optional<Counterexample> falsify_monotone(const Expr& e, std::size_t arity, std::size_t num_regexes,
                                               const FalsifierOptions& opts = {});
// Checks one specific isotonicity witness.
std::optional<Counterexample> check_isotone_witness(const Expr& e, std::size_t arity, VerdictMask verdicts,
                                                    const PathAttributes& a, const PathAttributes& b,
                                                    const LinkSample& link);

class DecompositionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Subpolicy {
    int pid = 0;
    ExprPtr branch_rank;
    // Non-isotone branch order: the runtime keeps a bounded frontier.
    bool pareto = false;
    // Attributes that order this branch (dominance dimensions when pareto).
    std::set<Attr> order_attrs;
};

struct Decomposition {
    std::vector<Subpolicy> subpolicies;
    std::set<Attr> carried_attrs;
    Policy recombine;

    std::size_t num_pids() const { return subpolicies.size(); }
    bool any_pareto() const;
};

// Throws DecompositionError for non-monotone policies.
Decomposition decompose(const Policy& policy, const AnalysisReport& report);

// Line-oriented key=value report.
std::string format_report(const Policy& policy, const AnalysisReport& report, const Decomposition* dec);

}  // namespace contra
