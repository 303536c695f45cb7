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
#include <gtest/gtest.h>

#include <random>

#include "contra/automata.hpp"
#include "regex_oracle.hpp"

using namespace contra;

namespace {

const std::vector<std::string> kSigma = {"A", "B", "C"};

RegexPtr regex_of(const std::string& text, const std::vector<std::string>& nodes = {"A", "B", "C", "D"}) {
    auto p = parse_policy("minimize(if " + text + " then 0 else 1)", nodes);
    return p.regexes.at(0);
}

RegexPtr random_regex(std::mt19937_64& rng, int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    switch (depth <= 0 ? pick(2) : pick(6)) {
        case 0: return Regex::make_node(kSigma[static_cast<std::size_t>(pick(3))]);
        case 1: return pick(3) ? Regex::make_node(kSigma[static_cast<std::size_t>(pick(3))]) : Regex::make_any();
        case 2: return Regex::make_alt(random_regex(rng, depth - 1), random_regex(rng, depth - 1));
        case 3:
        case 4: return Regex::make_concat(random_regex(rng, depth - 1), random_regex(rng, depth - 1));
        default: return Regex::make_star(random_regex(rng, depth - 1));
    }
}

std::vector<oracle::Word> all_words(std::size_t max_len) {
    std::vector<oracle::Word> out{{}};
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].size() == max_len) continue;
        for (const auto& s : kSigma) {
            auto w = out[i];
            w.push_back(s);
            out.push_back(w);
        }
    }
    return out;
}

// Table filling: true when every pair of distinct states is distinguishable.
bool all_distinguishable(const Dfa& d) {
    const int n = d.num_states;
    const int k = static_cast<int>(d.alphabet.size());
    std::vector<char> diff(static_cast<std::size_t>(n * n), 0);
    auto at = [&](int p, int q) -> char& { return diff[static_cast<std::size_t>(p * n + q)]; };
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) at(p, q) = d.accepts(p) != d.accepts(q);
    for (bool changed = true; changed;) {
        changed = false;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                if (at(p, q)) continue;
                for (int s = 0; s < k; ++s)
                    if (at(d.step(p, s), d.step(q, s))) {
                        at(p, q) = 1;
                        changed = true;
                        break;
                    }
            }
    }
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q)
            if (!at(p, q)) return false;
    return true;
}

}  // namespace

TEST(AutomataOracle, RandomRegexesAgreeOnAllShortWords) {
    std::mt19937_64 rng(2024);
    const auto words = all_words(6);
    for (int i = 0; i < 150; ++i) {
        auto r = random_regex(rng, 1 + i % 4);
        Dfa d = compile_regex(*r, kSigma);
        for (const auto& w : words) {
            bool bt = oracle::backtrack_match(*r, w);
            ASSERT_EQ(oracle::derivative_match(*r, w), bt) << regex_to_string(*r);
            ASSERT_EQ(d.matches(w), bt) << regex_to_string(*r);
        }
    }
}

TEST(AutomataOracle, ResultIsMinimalAndGarbageAbsorbs) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 150; ++i) {
        auto r = random_regex(rng, 1 + i % 4);
        Dfa d = compile_regex(*r, kSigma);
        ASSERT_EQ(d.garbage, d.num_states - 1);
        EXPECT_FALSE(d.accepts(d.garbage));
        for (int s = 0; s < static_cast<int>(kSigma.size()); ++s) EXPECT_EQ(d.step(d.garbage, s), d.garbage);
        EXPECT_TRUE(all_distinguishable(d)) << regex_to_string(*r) << "\n" << dump_dfa(d);
        // Every state but garbage is reachable from the start.
        std::vector<char> seen(static_cast<std::size_t>(d.num_states), 0);
        std::vector<int> stack{d.initial};
        seen[static_cast<std::size_t>(d.initial)] = 1;
        while (!stack.empty()) {
            int q = stack.back();
            stack.pop_back();
            for (int s = 0; s < 3; ++s) {
                int n = d.step(q, s);
                if (!seen[static_cast<std::size_t>(n)]) {
                    seen[static_cast<std::size_t>(n)] = 1;
                    stack.push_back(n);
                }
            }
        }
        for (int q = 0; q < d.garbage; ++q) EXPECT_TRUE(seen[static_cast<std::size_t>(q)]);
    }
}

TEST(AutomataOracle, ReversedRegexMatchesReversedWords) {
    std::mt19937_64 rng(5);
    const auto words = all_words(5);
    for (int i = 0; i < 80; ++i) {
        auto r = random_regex(rng, 3);
        auto rev = reverse_regex(r);
        for (auto w : words) {
            bool fwd = oracle::backtrack_match(*r, w);
            std::reverse(w.begin(), w.end());
            ASSERT_EQ(oracle::backtrack_match(*rev, w), fwd) << regex_to_string(*r);
        }
    }
}

TEST(Automata, ReverseExamples) {
    EXPECT_EQ(regex_to_string(*reverse_regex(regex_of("A B D"))), "D (B A)");
    EXPECT_EQ(regex_to_string(*reverse_regex(regex_of("B .* D"))), "D (.* B)");
    EXPECT_TRUE(regex_equal(*reverse_regex(reverse_regex(regex_of("(A + B C)* D"))), *regex_of("(A + B C)* D")));
}

TEST(Automata, ReversedPathDfa) {
    const std::vector<std::string> sigma = {"A", "B", "C", "D"};
    Dfa d = compile_regex(*reverse_regex(regex_of("A B D")), sigma);
    EXPECT_EQ(d.num_states, 5);  // four live states plus garbage
    EXPECT_EQ(d.initial, 0);
    int q = d.step(d.initial, "D");
    q = d.step(q, "B");
    q = d.step(q, "A");
    EXPECT_TRUE(d.accepts(q));
    EXPECT_EQ(d.step(q, "A"), d.garbage);
    EXPECT_EQ(d.step(d.initial, "A"), d.garbage);
    EXPECT_TRUE(d.matches({"D", "B", "A"}));
    EXPECT_FALSE(d.matches({"A", "B", "D"}));
}

TEST(Automata, AnyStarHasSingleLiveState) {
    Dfa d = compile_regex(*regex_of(".*"), {"A", "B"});
    EXPECT_TRUE(d.accepts(d.initial));
    EXPECT_EQ(d.step(d.initial, "A"), d.initial);
    EXPECT_EQ(d.num_states, 2);
}

TEST(Automata, PrefixThenAny) {
    Dfa d = compile_regex(*regex_of("A .*"), {"A", "B"});
    EXPECT_TRUE(d.matches({"A", "B"}));
    EXPECT_FALSE(d.matches({"B", "A"}));
    EXPECT_EQ(d.symbol("A"), 0);
}

TEST(Automata, DumpIsStable) {
    const std::vector<std::string> sigma = {"A", "B", "D"};
    auto a = dump_dfa(compile_regex(*regex_of("A B D"), sigma));
    EXPECT_EQ(a, dump_dfa(compile_regex(*regex_of("A B D"), sigma)));
    EXPECT_NE(a.find("(start)"), std::string::npos);
    EXPECT_NE(a.find("(garbage)"), std::string::npos);
}
