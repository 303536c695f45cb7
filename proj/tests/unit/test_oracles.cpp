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
// The test oracles check each other before anything is checked against them.

#include <gtest/gtest.h>

#include <random>

#include "harness.hpp"
#include "path_oracle.hpp"

using namespace contra;

namespace {

const std::vector<std::string> kSigma = {"A", "B", "C"};

RegexPtr random_regex(std::mt19937_64& rng, int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    switch (depth <= 0 ? pick(2) : pick(5)) {
        case 0: return Regex::make_node(kSigma[static_cast<std::size_t>(pick(3))]);
        case 1: return Regex::make_any();
        case 2: return Regex::make_alt(random_regex(rng, depth - 1), random_regex(rng, depth - 1));
        case 3: return Regex::make_concat(random_regex(rng, depth - 1), random_regex(rng, depth - 1));
        default: return Regex::make_star(random_regex(rng, depth - 1));
    }
}

}  // namespace

TEST(Oracles, MatchersAgree) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 300; ++i) {
        auto r = random_regex(rng, 3);
        for (int k = 0; k < 50; ++k) {
            oracle::Word w;
            int len = static_cast<int>(rng() % 7);
            for (int j = 0; j < len; ++j) w.push_back(kSigma[rng() % 3]);
            ASSERT_EQ(oracle::backtrack_match(*r, w), oracle::derivative_match(*r, w)) << regex_to_string(*r);
        }
    }
}

TEST(Oracles, HandPickedMatches) {
    auto p = parse_policy("minimize(if (A + B)* C then 0 else if .* B A .* then 1 else 2)", kSigma);
    const auto& r0 = *p.regexes[0];
    const auto& r1 = *p.regexes[1];
    EXPECT_TRUE(oracle::backtrack_match(r0, {"C"}));
    EXPECT_TRUE(oracle::backtrack_match(r0, {"A", "B", "A", "C"}));
    EXPECT_FALSE(oracle::backtrack_match(r0, {"A", "C", "C"}));
    EXPECT_TRUE(oracle::derivative_match(r1, {"C", "B", "A"}));
    EXPECT_FALSE(oracle::derivative_match(r1, {"A", "B"}));
}

TEST(Oracles, BestWalkOnRunningExample) {
    auto t = load_topology(harness::data_path("topologies/fig6.topo"));
    auto p = parse_policy(harness::policy_text("fig6"), t.names());
    auto bd = oracle::best_walk(p, t, t.node("B"), t.node("D"));
    EXPECT_EQ(bd.rank.str(), "(0.2)");
    EXPECT_EQ(bd.walk, (std::vector<int>{t.node("B"), t.node("C"), t.node("D")}));
    auto ad = oracle::best_walk(p, t, t.node("A"), t.node("D"));
    EXPECT_EQ(ad.rank.str(), "(0)");
    EXPECT_TRUE(oracle::best_walk(p, t, t.node("C"), t.node("D")).walk.empty());
    EXPECT_EQ(oracle::simple_paths(t, t.node("B"), t.node("D")).size(), 3u);
}

TEST(Oracles, BestWalkNeverWorseThanSimplePaths) {
    for (int seed = 1; seed <= 10; ++seed) {
        auto t = harness::random_graph(6, 2.5, static_cast<std::uint64_t>(seed));
        for (int pi : {1, 2, 4, 9}) {
            auto p = parse_policy(harness::policy_text("p" + std::to_string(pi)), t.names());
            for (int s = 0; s < t.num_nodes(); ++s) {
                auto o = oracle::best_walk(p, t, s, 0);
                if (s == 0) continue;
                ASSERT_FALSE(o.walk.empty());
                EXPECT_EQ(o.walk.front(), s);
                EXPECT_EQ(o.walk.back(), 0);
                EXPECT_EQ(oracle::walk_rank(p, t, o.walk), o.rank);
                for (const auto& path : oracle::simple_paths(t, s, 0))
                    EXPECT_TRUE(compare_rank(o.rank, oracle::walk_rank(p, t, path)) <= 0);
            }
        }
    }
}
