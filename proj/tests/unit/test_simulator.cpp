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

#include "contra/simulator.hpp"
#include "harness.hpp"

using namespace contra;

namespace {

SimConfig scenario(const std::string& name) { return load_scenario(harness::data_path("scenarios/" + name + ".scn")); }

// Two switches, one host each.
SimConfig two_node(std::int64_t lat_ns = 5'000) {
    SimConfig c;
    Topology t;
    t.add_node("X");
    t.add_node("Y");
    t.add_link(0, 1, 10'000'000'000, lat_ns);
    t.set_hosts(0, 1);
    t.set_hosts(1, 1);
    c.topo = t;
    return c;
}

SimConfig short_fattree(std::int64_t ms) {
    auto c = scenario("fct_fattree");
    c.duration_ns = ms * 1'000'000;
    c.workload_stop_ns = c.duration_ns;
    return c;
}

void expect_conserved(const MetricsReport& r) {
    EXPECT_EQ(r.data_bytes_injected, r.data_bytes_delivered + r.data_bytes_dropped + r.data_bytes_in_flight);
    EXPECT_GT(r.data_bytes_delivered, 0u);
}

}  // namespace

TEST(SimulatorDeterminism, IdenticalRecordsForSameSeed) {
    auto c = short_fattree(30);
    auto a = run_simulation(c);
    auto b = run_simulation(c);
    EXPECT_EQ(a.to_records(), b.to_records());
    EXPECT_EQ(a.fct_csv(), b.fct_csv());
    EXPECT_EQ(a.config_hash, c.hash());
    EXPECT_GT(a.flows.size(), 10u);
}

TEST(SimulatorDeterminism, SeedChangesWorkload) {
    auto c = short_fattree(10);
    auto a = run_simulation(c);
    c.seed = 2;
    auto b = run_simulation(c);
    EXPECT_NE(a.fct_csv(), b.fct_csv());
    EXPECT_NE(a.config_hash, b.config_hash);
}

TEST(SimulatorDeterminism, EveryBaselineIsRepeatable) {
    auto c = short_fattree(10);
    for (auto s : {Scheme::ecmp, Scheme::hula, Scheme::spain, Scheme::sp}) {
        c.scheme = s;
        EXPECT_EQ(run_simulation(c).to_records(), run_simulation(c).to_records()) << scheme_name(s);
    }
}

TEST(Simulator, BytesAreConserved) {
    auto c = short_fattree(20);
    for (auto s : {Scheme::contra, Scheme::ecmp, Scheme::hula}) {
        c.scheme = s;
        expect_conserved(run_simulation(c));
    }
    expect_conserved(run_simulation(scenario("failure_fattree")));
}

TEST(Simulator, IdleFlowCompletionTime) {
    // 14,600 bytes is ten full packets sent in the first window. The last
    // one leaves the host after 10 transmissions, then crosses two more links.
    auto c = two_node(5'000);
    c.scheme = Scheme::ecmp;
    c.workload = parse_cdf("14600 1\n");
    c.load = 0.001;
    c.workload_stop_ns = 50'000'000;
    c.duration_ns = 50'000'000;
    auto r = run_simulation(c);
    ASSERT_FALSE(r.flows.empty());
    const std::int64_t tx = 1500 * 8 / 10;  // ns at 10 Gb/s
    const std::int64_t want = 10 * tx + c.host_latency_ns + (tx + 5'000) + (tx + c.host_latency_ns);
    std::int64_t best = INT64_MAX;
    for (const auto& f : r.flows) {
        EXPECT_EQ(f.bytes, 14'600);
        if (f.end_ns >= 0) best = std::min(best, f.end_ns - f.start_ns);
    }
    EXPECT_EQ(best, want);
}

TEST(Simulator, UtilizationEstimator) {
    for (auto [gbps, lo, hi] : {std::tuple{0.0, 0.0, 0.0}, std::tuple{5.0, 0.45, 0.55}, std::tuple{10.0, 0.95, 1.0}}) {
        auto c = two_node();
        c.duration_ns = 5'000'000;
        if (gbps > 0) c.cbr.push_back({0, 1, gbps, 0, c.duration_ns});
        Simulator s(c);
        s.run(4'000'000);
        double u = s.link_util(0).to_double();
        EXPECT_GE(u, lo) << gbps;
        EXPECT_LE(u, hi) << gbps;
        EXPECT_EQ(s.link_util(1).to_double(), 0.0);
    }
}

TEST(Simulator, FailureIsDetectedWithinBound) {
    auto c = scenario("failure_fattree");
    auto r = run_simulation(c);
    bool found = false;
    for (const auto& d : r.detections) {
        if (d.t_fail < 0) continue;
        found = true;
        EXPECT_GE(d.t_detect, d.t_fail);
        EXPECT_LE(d.t_detect - d.t_last_probe, 4 * c.runtime.probe_period_ns);
    }
    EXPECT_TRUE(found);
}

TEST(Simulator, RunningExampleTrace) {
    SimConfig c;
    c.topo = load_topology(harness::data_path("topologies/fig6.topo"));
    c.policy = harness::policy_text("fig6");
    c.duration_ns = 3 * c.runtime.probe_period_ns - 1;
    Simulator s(c);
    s.run();
    const auto& t = c.topo;
    EXPECT_EQ(s.trace(t.node("A"), t.node("D")).nodes,
              (std::vector<int>{t.node("A"), t.node("B"), t.node("D")}));
    EXPECT_EQ(s.trace(t.node("B"), t.node("D")).nodes,
              (std::vector<int>{t.node("B"), t.node("C"), t.node("D")}));
}

TEST(Simulator, ProbePeriodCheckedAgainstRtt) {
    auto c = scenario("two_path_period_50");
    c.check_probe_period = true;
    EXPECT_THROW(Simulator s(c), ConfigError);
    c.check_probe_period = false;
    Simulator ok(c);
    ok.run();
    EXPECT_FALSE(ok.report().warnings.empty());
    c.runtime.probe_period_ns = 200'000;
    c.check_probe_period = true;
    EXPECT_NO_THROW(Simulator s2(c));
}

TEST(Scenario, ParseErrors) {
    const std::string base = harness::data_path("scenarios");
    EXPECT_THROW(parse_scenario("duration_ms = 1\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\nbogus = 1\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\nversioning = maybe\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\nutil = c0 zz 0.5\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\nfail = c0 c1 1\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\ncbr = e0_0 e1_0\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\nduration_ms = soon\n", base), ConfigError);
    EXPECT_THROW(parse_scenario("topology = fattree 4\npolicy = missing.pol\n", base), ConfigError);
    EXPECT_THROW(parse_scheme("bogus"), ConfigError);
}

TEST(Scenario, ParsesKeys) {
    const std::string text = "topology = fattree 4\nscheme = hula\nseed = 9\nprobe_period_us = 300\n"
                             "fail = a0_0 c0 5 7\ncbr = e0_0 e2_0 2 1 3\ninject = 10 e0_0 e2_0 4 1\n";
    auto c = parse_scenario(text, harness::data_path("scenarios"));
    EXPECT_EQ(c.scheme, Scheme::hula);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.runtime.probe_period_ns, 300'000);
    ASSERT_EQ(c.failures.size(), 1u);
    EXPECT_EQ(c.failures[0].down_ns, 5'000'000);
    EXPECT_EQ(c.failures[0].up_ns, 7'000'000);
    ASSERT_EQ(c.cbr.size(), 1u);
    EXPECT_DOUBLE_EQ(c.cbr[0].gbps, 2.0);
    ASSERT_EQ(c.injections.size(), 1u);
    EXPECT_EQ(c.injections[0].count, 4);
    EXPECT_EQ(c.topo.num_nodes(), 20);
    EXPECT_EQ(c.canonical(), parse_scenario(text, harness::data_path("scenarios")).canonical());
    EXPECT_NE(c.hash(), parse_scenario(text + "seed = 10\n", harness::data_path("scenarios")).hash());
}

TEST(Workload, Cdf) {
    auto cdf = parse_cdf("# sizes\n100 0\n200 0.5\n400 1\n");
    EXPECT_DOUBLE_EQ(cdf.mean_bytes(), 225.0);
    std::mt19937_64 rng(1);
    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
        auto s = cdf.sample(rng);
        ASSERT_GE(s, 100);
        ASSERT_LE(s, 400);
        sum += static_cast<double>(s);
    }
    EXPECT_NEAR(sum / 20000, 225.0, 5.0);
    EXPECT_THROW(parse_cdf("100 0.5\n200 0.4\n300 1\n"), ConfigError);
    EXPECT_THROW(parse_cdf("100 0.5\n"), ConfigError);
    EXPECT_THROW(parse_cdf("100\n"), ConfigError);
    EXPECT_GT(load_cdf(harness::data_path("workloads/websearch.cdf")).mean_bytes(), 1e5);
}

TEST(Sweep, RowsPerLoadAndScheme) {
    auto c = short_fattree(10);
    auto csv = sweep(c, {0.2, 0.8}, {Scheme::ecmp, Scheme::contra});
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], "scheme,load,seed,flows,completed,mean_fct_us,p99_fct_us,drops");
    EXPECT_EQ(sweep(c, {}, {Scheme::ecmp}), lines[0] + "\n");
    EXPECT_THROW(sweep(c, {1.5}, {Scheme::ecmp}), ConfigError);
}
