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

#include "contra/switch_runtime.hpp"
#include "harness.hpp"

using namespace contra;

namespace {

// S - M1 - D and S - M2 - D.
Topology diamond() {
    Topology t;
    for (const char* n : {"S", "M1", "M2", "D"}) t.add_node(n);
    t.add_link(0, 1, 10'000'000'000, 1'000);
    t.add_link(1, 3, 10'000'000'000, 1'000);
    t.add_link(0, 2, 10'000'000'000, 1'000);
    t.add_link(2, 3, 10'000'000'000, 1'000);
    return t;
}

struct Fixture {
    Topology topo = diamond();
    CompiledPolicy c = compile_policy(std::string("minimize(path.util)"), topo);
    int S = topo.node("S"), M1 = topo.node("M1"), M2 = topo.node("M2"), D = topo.node("D");

    SwitchRuntime make(int node, RuntimeConfig cfg = {}) { return SwitchRuntime(node, c, topo, cfg); }

    // Probe for D carrying the given utilization so far.
    Probe probe(std::uint32_t version, Rational util = Rational(0)) const {
        Probe p;
        p.origin = D;
        p.pid = 0;
        p.tag = 0;
        p.version = version;
        p.mv.util = util;
        return p;
    }
};

const SwitchRuntime::UtilFn kZero = [](int) { return Rational(0); };

}  // namespace

TEST(SwitchRuntime, InitProbesGoToEveryPgSuccessor) {
    Fixture f;
    auto d = f.make(f.D);
    auto out = d.init_probes(1, 0);
    ASSERT_EQ(out.size(), 2u);
    for (const auto& o : out) {
        EXPECT_EQ(f.topo.link(o.link).from, f.D);
        EXPECT_EQ(o.probe.origin, f.D);
        EXPECT_EQ(o.probe.version, 1u);
    }
    EXPECT_EQ(d.counters().probes_sent, 2u);
}

TEST(SwitchRuntime, ProbeExtendsMetricAndForwards) {
    Fixture f;
    auto m1 = f.make(f.M1);
    int in = f.topo.link_between(f.D, f.M1);
    auto out = m1.process_probe(f.probe(1), in, 0, [](int) { return Rational(1, 4); });
    ASSERT_EQ(out.size(), 1u);  // never back to the origin
    EXPECT_EQ(f.topo.link(out[0].link).to, f.S);
    EXPECT_EQ(out[0].probe.mv.util, Rational(1, 4));
    auto b = m1.best(f.D);
    ASSERT_TRUE(b.has_value());
    EXPECT_EQ(m1.fwd_table().at(*b).nhop, f.D);
    EXPECT_EQ(m1.fwd_table().at(*b).link, Topology::reverse(in));
}

TEST(SwitchRuntime, StaleProbeDiscarded) {
    Fixture f;
    auto m1 = f.make(f.M1);
    int in = f.topo.link_between(f.D, f.M1);
    m1.process_probe(f.probe(2, Rational(1, 2)), in, 0, kZero);
    EXPECT_TRUE(m1.process_probe(f.probe(1, Rational(0)), in, 0, kZero).empty());
    EXPECT_EQ(m1.counters().probes_discarded_stale, 1u);
    EXPECT_EQ(m1.fwd_table().begin()->second.mv.util, Rational(1, 2));
}

TEST(SwitchRuntime, NewerProbeFromSameUpstreamReplacesWorse) {
    Fixture f;
    auto m1 = f.make(f.M1);
    int in = f.topo.link_between(f.D, f.M1);
    m1.process_probe(f.probe(1, Rational(1, 10)), in, 0, kZero);
    EXPECT_FALSE(m1.process_probe(f.probe(2, Rational(9, 10)), in, 0, kZero).empty());
    EXPECT_EQ(m1.fwd_table().begin()->second.mv.util, Rational(9, 10));
    EXPECT_EQ(m1.fwd_table().begin()->second.version, 2u);
}

TEST(SwitchRuntime, OtherUpstreamMustBeBetterOrIncumbentStale) {
    Fixture f;
    auto s = f.make(f.S);
    int from_m1 = f.topo.link_between(f.M1, f.S), from_m2 = f.topo.link_between(f.M2, f.S);
    s.process_probe(f.probe(1, Rational(2, 10)), from_m1, 0, kZero);
    s.process_probe(f.probe(1, Rational(5, 10)), from_m2, 0, kZero);
    EXPECT_EQ(s.counters().probes_not_better, 1u);
    s.process_probe(f.probe(2, Rational(5, 10)), from_m2, 0, kZero);
    EXPECT_EQ(s.fwd_table().begin()->second.nhop, f.M1);
    // M1 missed a whole round: its entry gives way.
    s.process_probe(f.probe(3, Rational(5, 10)), from_m2, 0, kZero);
    EXPECT_EQ(s.fwd_table().begin()->second.nhop, f.M2);
    s.process_probe(f.probe(3, Rational(1, 10)), from_m1, 0, kZero);
    EXPECT_EQ(s.fwd_table().begin()->second.nhop, f.M1);
}

TEST(SwitchRuntime, LinkFailureAfterMissedPeriods) {
    Fixture f;
    RuntimeConfig cfg;
    auto s = f.make(f.S, cfg);
    int from_m1 = f.topo.link_between(f.M1, f.S);
    int to_m1 = Topology::reverse(from_m1);
    s.process_probe(f.probe(1), from_m1, 1'000'000, kZero);
    EXPECT_EQ(s.last_probe(to_m1), 1'000'000);
    const auto p = cfg.probe_period_ns;
    EXPECT_FALSE(s.check_link_failed(to_m1, 1'000'000 + 29 * p / 10));
    EXPECT_TRUE(s.check_link_failed(to_m1, 1'000'000 + 31 * p / 10));
    EXPECT_TRUE(s.best(f.D).has_value());
    auto failed = s.check_liveness(1'000'000 + 31 * p / 10);
    EXPECT_NE(std::find(failed.begin(), failed.end(), to_m1), failed.end());
    EXPECT_TRUE(s.link_marked_failed(to_m1));
    EXPECT_FALSE(s.best(f.D).has_value());
    // A probe on the link brings it back.
    s.process_probe(f.probe(9), from_m1, 2'000'000, kZero);
    EXPECT_FALSE(s.link_marked_failed(to_m1));
    EXPECT_TRUE(s.best(f.D).has_value());
}

TEST(SwitchRuntime, FlowletPinsUntilTimeout) {
    Fixture f;
    RuntimeConfig cfg;
    cfg.flowlet_timeout_ns = 100'000;
    auto s = f.make(f.S, cfg);
    int from_m1 = f.topo.link_between(f.M1, f.S), from_m2 = f.topo.link_between(f.M2, f.S);
    s.process_probe(f.probe(1, Rational(2, 10)), from_m1, 0, kZero);
    s.process_probe(f.probe(1, Rational(5, 10)), from_m2, 0, kZero);

    PacketHeader h;
    h.dst = f.D;
    h.fid = 7;
    auto d = s.forward_packet(h, true, 10'000);
    ASSERT_EQ(d.kind, Decision::Kind::send);
    EXPECT_EQ(d.link, Topology::reverse(from_m1));

    s.process_probe(f.probe(1, Rational(0)), from_m2, 20'000, kZero);  // M2 now strictly better
    PacketHeader h2 = h;
    h2.ttl = kInitialTtl;
    EXPECT_EQ(s.forward_packet(h2, true, 60'000).link, Topology::reverse(from_m1));
    PacketHeader other = h;
    other.fid = 8;
    EXPECT_EQ(s.forward_packet(other, true, 60'000).link, Topology::reverse(from_m2));
    PacketHeader h3 = h;
    EXPECT_EQ(s.forward_packet(h3, true, 60'000 + cfg.flowlet_timeout_ns + 1).link, Topology::reverse(from_m2));
}

TEST(SwitchRuntime, TtlSpreadFlushesFlowlet) {
    Fixture f;
    auto s = f.make(f.S);
    s.process_probe(f.probe(1), f.topo.link_between(f.M1, f.S), 0, kZero);
    PacketHeader h;
    h.dst = f.D;
    h.tag = 0;
    h.pid = 0;
    h.fid = 3;
    h.pkt_hash = 12345;
    h.ttl = 61;
    EXPECT_EQ(s.forward_packet(h, false, 1'000).kind, Decision::Kind::send);
    EXPECT_EQ(s.flowlet_table().size(), 1u);
    h.ttl = 55;
    EXPECT_EQ(s.forward_packet(h, false, 2'000).kind, Decision::Kind::send);
    EXPECT_EQ(s.counters().loop_detections, 1u);
    EXPECT_EQ(s.counters().flowlet_flushes, 1u);
    h.ttl = 1;
    EXPECT_EQ(s.forward_packet(h, false, 3'000).kind, Decision::Kind::drop_ttl);
}

TEST(SwitchRuntime, DeliverAndUnroutable) {
    Fixture f;
    auto s = f.make(f.S);
    PacketHeader h;
    h.dst = f.S;
    EXPECT_EQ(s.forward_packet(h, true, 0).kind, Decision::Kind::deliver);
    h.dst = f.D;
    EXPECT_EQ(s.forward_packet(h, true, 0).kind, Decision::Kind::drop_unroutable);
    EXPECT_EQ(s.counters().packets_unroutable, 1u);
}

TEST(SwitchRuntime, RunningExampleTables) {
    harness::Network net(load_topology(harness::data_path("topologies/fig6.topo")), harness::policy_text("fig6"));
    net.run_rounds(3);
    const auto& t = net.topo;
    const auto& pg = net.compiled->pg;
    const int A = t.node("A"), B = t.node("B"), C = t.node("C"), D = t.node("D");
    std::map<std::string, FwdEntry> at_b;
    for (const auto& [k, e] : net.sw[static_cast<std::size_t>(B)].fwd_table())
        if (k.dst == D) at_b[pg.label(t, pg.node_at(B, k.tag))] = e;
    ASSERT_EQ(at_b.size(), 2u);
    EXPECT_EQ(at_b["B0"].nhop, D);
    EXPECT_EQ(at_b["B0"].mv.util, Rational(3, 10));
    EXPECT_EQ(at_b["B1"].nhop, C);
    EXPECT_EQ(at_b["B1"].mv.util, Rational(2, 10));
    auto bb = net.sw[static_cast<std::size_t>(B)].best(D);
    ASSERT_TRUE(bb);
    EXPECT_EQ(pg.label(t, pg.node_at(B, bb->tag)), "B1");
    EXPECT_EQ(net.send(A, D, 1).nodes, (std::vector<int>{A, B, D}));
    EXPECT_EQ(net.send(B, D, 2).nodes, (std::vector<int>{B, C, D}));
    EXPECT_NE(net.sw[static_cast<std::size_t>(B)].dump().find("BEST B dst=D tag=B1"), std::string::npos);
}

TEST(SwitchRuntime, PacketsFollowProductGraphEdges) {
    for (int seed = 1; seed <= 6; ++seed) {
        auto topo = harness::random_graph(6, 2.5, static_cast<std::uint64_t>(seed) + 40);
        for (int pi : {4, 5, 6, 9}) {
            auto text = harness::instantiate(harness::policy_text("p" + std::to_string(pi)), topo, static_cast<std::uint64_t>(seed));
            harness::Network net(topo, text);
            net.run_rounds(3);
            const auto& pg = net.compiled->pg;
            for (int d = 0; d < topo.num_nodes(); ++d)
                for (int s = 0; s < topo.num_nodes(); ++s) {
                    if (s == d) continue;
                    auto w = net.send(s, d, static_cast<std::uint32_t>(s * 64 + d + 1));
                    if (!w.delivered) {
                        EXPECT_FALSE(net.sw[static_cast<std::size_t>(s)].best(d).has_value()) << text;
                        continue;
                    }
                    EXPECT_FALSE(w.revisit);
                    for (std::size_t i = 0; i + 1 < w.hops.size(); ++i) {
                        int u = pg.node_at(w.hops[i].first, w.hops[i].second);
                        int v = pg.node_at(w.hops[i + 1].first, w.hops[i + 1].second);
                        const auto& succ = pg.succ[static_cast<std::size_t>(v)];
                        EXPECT_NE(std::find(succ.begin(), succ.end(), u), succ.end()) << text;
                    }
                    int last = pg.node_at(w.hops.back().first, w.hops.back().second);
                    const auto& succ = pg.succ[static_cast<std::size_t>(probe_sending_state(pg, d))];
                    EXPECT_NE(std::find(succ.begin(), succ.end(), last), succ.end()) << text;
                }
        }
    }
}
