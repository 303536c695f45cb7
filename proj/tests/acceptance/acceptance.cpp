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

// Acceptance runner: one PASS/FAIL line per criterion, exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "contra/simulator.hpp"
#include "harness.hpp"
#include "path_oracle.hpp"

#ifndef CONTRA_UNIT_TESTS
#define CONTRA_UNIT_TESTS "contra_tests"
#endif

using namespace contra;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

SimConfig scenario(const std::string& name) { return load_scenario(harness::data_path("scenarios/" + name + ".scn")); }

std::string path_str(const Topology& t, const std::vector<int>& nodes) {
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += (i ? "-" : "") + t.name(nodes[i]);
    return s;
}

// ------------------------------------------------------------------ 1

Outcome fig6_golden() {
    auto t0 = Clock::now();
    SimConfig cfg;
    cfg.topo = load_topology(harness::data_path("topologies/fig6.topo"));
    cfg.policy = harness::policy_text("fig6");
    cfg.duration_ns = 3 * cfg.runtime.probe_period_ns - 1;
    Simulator sim(cfg);
    sim.run();
    const auto& t = cfg.topo;
    const auto& pg = sim.compiled()->pg;
    const int A = t.node("A"), B = t.node("B"), C = t.node("C"), D = t.node("D");

    std::map<std::string, FwdEntry> b_entries;
    for (const auto& [k, e] : sim.switch_at(B).fwd_table())
        if (k.dst == D) b_entries[pg.label(t, pg.node_at(B, k.tag))] = e;
    auto bbest = sim.switch_at(B).best(D);
    auto abest = sim.switch_at(A).best(D);
    auto trace = sim.trace(A, D);
    double secs = seconds_since(t0);

    bool ok = b_entries.size() == 2 && b_entries.count("B0") && b_entries.count("B1");
    if (ok) {
        ok = b_entries["B0"].nhop == D && b_entries["B0"].mv.util == Rational(3, 10) && b_entries["B1"].nhop == C &&
             b_entries["B1"].mv.util == Rational(2, 10);
    }
    ok = ok && bbest && pg.label(t, pg.node_at(B, bbest->tag)) == "B1";
    ok = ok && abest && pg.label(t, pg.node_at(A, abest->tag)) == "A1";
    ok = ok && trace.nodes == std::vector<int>{A, B, D};
    ok = ok && secs < 1.0;
    return {ok, "B0->(D," + (b_entries.count("B0") ? b_entries["B0"].mv.util.str() : "?") + ") B1->(C," +
                    (b_entries.count("B1") ? b_entries["B1"].mv.util.str() : "?") + ") A path " +
                    path_str(t, trace.nodes) + " in " + fmt(secs) + "s"};
}

// ------------------------------------------------------------------ 2, 3

struct OracleSuite {
    long checked = 0;
    long mismatches = 0;
    long revisits = 0;
    long undelivered = 0;
    long finite = 0;
    long nonsimple = 0;
    long compile_errors = 0;
    double secs = 0;
    std::vector<std::string> pareto_policies;
    std::vector<std::string> notes;
};

const OracleSuite& oracle_suite() {
    static OracleSuite s = [] {
        OracleSuite r;
        auto t0 = Clock::now();
        std::vector<Topology> graphs;
        for (int seed = 1; seed <= 50; ++seed) graphs.push_back(harness::random_graph(3 + seed % 6, 2.5, seed));
        for (const char* f : {"fig6", "fig3_loop", "fig3_ba"})
            graphs.push_back(load_topology(harness::data_path(std::string("topologies/") + f + ".topo")));
        for (int pi = 1; pi <= 9; ++pi) {
            const std::string name = "p" + std::to_string(pi);
            bool pareto = false;
            for (std::size_t g = 0; g < graphs.size(); ++g) {
                if (!graphs[g].connected()) continue;
                std::string text = harness::instantiate(harness::policy_text(name), graphs[g], g + 1);
                std::unique_ptr<harness::Network> net;
                try {
                    net = std::make_unique<harness::Network>(graphs[g], text);
                } catch (const std::exception& e) {
                    ++r.compile_errors;
                    r.notes.push_back(name + ": " + e.what());
                    continue;
                }
                pareto = pareto || net->compiled->decomposition.any_pareto();
                net->run_rounds(3);
                const auto& t = net->topo;
                for (int d = 0; d < t.num_nodes(); ++d)
                    for (int src = 0; src < t.num_nodes(); ++src) {
                        if (src == d) continue;
                        ++r.checked;
                        auto o = oracle::best_walk(net->compiled->policy, t, src, d);
                        auto& sw = net->sw[static_cast<std::size_t>(src)];
                        auto b = sw.best(d);
                        if (!o.walk.empty()) {
                            ++r.finite;
                            std::set<int> u(o.walk.begin(), o.walk.end());
                            if (u.size() != o.walk.size()) ++r.nonsimple;
                        }
                        if (!b) {
                            if (!o.walk.empty()) ++r.mismatches;
                            continue;
                        }
                        auto rank = sw.s_value(*b, sw.fwd_table().at(*b));
                        if (o.walk.empty() || compare_rank(rank, o.rank) != 0) {
                            ++r.mismatches;
                            if (r.notes.size() < 5)
                                r.notes.push_back(name + " " + t.name(src) + "->" + t.name(d) + " got " + rank.str() +
                                                  " want " + o.rank.str());
                        }
                        auto w = net->send(src, d, static_cast<std::uint32_t>(src * 64 + d + 1));
                        if (!w.delivered) ++r.undelivered;
                        if (w.revisit) ++r.revisits;
                        if (w.delivered && !w.revisit &&
                            compare_rank(oracle::walk_rank(net->compiled->policy, t, w.nodes), o.rank) != 0)
                            ++r.mismatches;
                    }
            }
            if (pareto) r.pareto_policies.push_back(name);
        }
        r.secs = seconds_since(t0);
        return r;
    }();
    return s;
}

Outcome oracle_equivalence() {
    const auto& s = oracle_suite();
    std::string flagged;
    for (const auto& p : s.pareto_policies) flagged += (flagged.empty() ? "" : ",") + p;
    std::string d = std::to_string(s.checked) + " pairs (" + std::to_string(s.finite) + " finite, " +
                    std::to_string(s.nonsimple) + " optimal walks revisit a switch), " +
                    std::to_string(s.mismatches) + " mismatches, pareto-capped: " + (flagged.empty() ? "none" : flagged) +
                    ", " + fmt(s.secs) + "s";
    for (const auto& n : s.notes) d += "; " + n;
    return {s.mismatches == 0 && s.compile_errors == 0 && s.secs < 300, d};
}

Outcome loop_freedom() {
    const auto& s = oracle_suite();
    auto on = run_simulation(scenario("fig3_loop_versioning_on"));
    auto off = run_simulation(scenario("fig3_loop_versioning_off"));
    bool stable_ok = s.revisits == 0 && s.undelivered == 0;
    bool on_ok = on.looped_packets == 0 && on.packets_delivered == on.packets_injected && on.packets_injected > 0;
    bool off_ok = off.looped_packets > 0 && off.drops_ttl > 0;
    return {stable_ok && on_ok && off_ok,
            "stable: " + std::to_string(s.revisits) + " (switch,tag) revisits, " + std::to_string(s.undelivered) +
                " undelivered; versioned: " + std::to_string(on.packets_delivered) + "/" +
                std::to_string(on.packets_injected) + " delivered, " + std::to_string(on.looped_packets) +
                " looped; unversioned: " + std::to_string(off.looped_packets) + " looped, " +
                std::to_string(off.drops_ttl) + " ttl drops"};
}

// ------------------------------------------------------------------ 4, 5

int count_paths(const MetricsReport& r, const Topology& t, const std::function<bool(const std::string&)>& pred) {
    int n = 0;
    for (const auto& p : r.paths)
        if (pred(path_str(t, p.nodes))) ++n;
    return n;
}

Outcome policy_compliance() {
    auto on_cfg = scenario("fig3_ba_tagging_on");
    auto off_cfg = scenario("fig3_ba_tagging_off");
    auto on = run_simulation(on_cfg);
    auto off = run_simulation(off_cfg);
    contra::Policy ba = parse_policy("minimize(if .* B A .* then 1 else 0)", on_cfg.topo.names());
    auto violates = [&](const Topology& t, const DeliveredPath& p) {
        oracle::Word w;
        for (int n : p.nodes) w.push_back(t.name(n));
        return oracle::backtrack_match(*ba.regexes[0], w);
    };
    int von = 0, voff = 0;
    for (const auto& p : on.paths) von += violates(on_cfg.topo, p);
    for (const auto& p : off.paths) voff += violates(off_cfg.topo, p);
    return {von == 0 && !on.paths.empty() && voff >= 1,
            "tagging on: " + std::to_string(von) + "/" + std::to_string(on.paths.size()) +
                " delivered paths match .*BA.*; off: " + std::to_string(voff) + "/" + std::to_string(off.paths.size())};
}

Outcome zigzag_guard() {
    auto on_cfg = scenario("zigzag_flowlets_on");
    auto off_cfg = scenario("zigzag_flowlets_off");
    auto on = run_simulation(on_cfg);
    auto off = run_simulation(off_cfg);
    auto zig = [](const std::string& p) { return p == "S-C-E-B-D" || p == "S-A-E-F-D"; };
    int zon = count_paths(on, on_cfg.topo, zig), zoff = count_paths(off, off_cfg.topo, zig);
    return {zon == 0 && !on.paths.empty() && zoff >= 1,
            "policy-aware: " + std::to_string(zon) + "/" + std::to_string(on.paths.size()) +
                " zigzag deliveries; oblivious: " + std::to_string(zoff) + "/" + std::to_string(off.paths.size())};
}

// ------------------------------------------------------------------ 6

Outcome probe_period_rule() {
    auto base = scenario("two_path_period_200");
    std::string detail;
    bool ok = true;
    for (std::int64_t us : {200, 256, 400, 1000, 50}) {
        SimConfig cfg = base;
        cfg.runtime.probe_period_ns = us * 1000;
        Simulator sim(cfg);
        sim.run();
        auto path = path_str(cfg.topo, sim.trace(cfg.topo.node("S"), cfg.topo.node("D")).nodes);
        if (us >= 200 && path != "S-M2-D") ok = false;
        detail += (detail.empty() ? "" : ", ") + std::to_string(us) + "us:" + path;
    }
    return {ok, detail + " (lower-utilization path is S-M2-D)"};
}

// ------------------------------------------------------------------ 7

Outcome failure_recovery() {
    auto cfg = scenario("failure_fattree");
    auto r = run_simulation(cfg);
    const auto& t = cfg.topo;
    const int failed = t.link_between(t.node("a0_0"), t.node("c0"));
    const std::int64_t period = cfg.runtime.probe_period_ns;
    const std::int64_t t_fail = cfg.failures.at(0).down_ns;

    std::int64_t t_detect = -1, worst_gap = 0;
    for (const auto& d : r.detections) {
        if (d.link != failed && d.link != Topology::reverse(failed)) continue;
        worst_gap = std::max(worst_gap, d.t_detect - d.t_last_probe);
        if (t_detect < 0 || d.t_detect < t_detect) t_detect = d.t_detect;
    }
    // Pre-failure level: the last millisecond before the failure, after all
    // streams have started.
    double pre = 0;
    int n = 0;
    for (const auto& s : r.throughput)
        if (s.t_ns > t_fail - 1'000'000 && s.t_ns <= t_fail) pre += s.gbps, ++n;
    pre = n ? pre / n : 0;
    std::int64_t recovered = -1;
    for (std::size_t i = 0; i < r.throughput.size(); ++i) {
        if (r.throughput[i].t_ns <= t_detect) continue;
        bool hold = true;
        for (std::size_t j = i; j < r.throughput.size(); ++j)
            if (r.throughput[j].gbps < 0.95 * pre) hold = false;
        if (hold) {
            recovered = r.throughput[i].t_ns;
            break;
        }
    }
    bool ok = t_detect >= 0 && worst_gap <= 4 * period && recovered >= 0 && recovered - t_detect <= 2'000'000;
    return {ok, "pre-failure " + fmt(pre, 2) + " Gbps; detected " + fmt((t_detect - t_fail) / 1e3, 0) +
                    "us after failure, " + fmt(worst_gap / 1e3, 0) + "us after last probe (limit " +
                    fmt(4 * period / 1e3, 0) + "us); >=95% from " +
                    (recovered >= 0 ? fmt((recovered - t_detect) / 1e3, 0) + "us after detection" : "never")};
}

// ------------------------------------------------------------------ 8, 9

struct FctRuns {
    std::map<std::pair<std::string, int>, MetricsReport> runs;
    double secs = 0;
};

FctRuns run_fct(const std::string& name, const std::vector<Scheme>& schemes) {
    FctRuns out;
    auto t0 = Clock::now();
    auto base = scenario(name);
    for (int seed = 1; seed <= 3; ++seed)
        for (Scheme s : schemes) {
            SimConfig cfg = base;
            cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.scheme = s;
            out.runs[{scheme_name(s), seed}] = run_simulation(cfg);
        }
    out.secs = seconds_since(t0);
    return out;
}

const FctRuns& fattree_runs() {
    static FctRuns r = run_fct("fct_fattree", {Scheme::contra, Scheme::ecmp, Scheme::hula});
    return r;
}

Outcome fct_ordering() {
    const auto& ft = fattree_runs();
    auto ab = run_fct("fct_abilene", {Scheme::contra, Scheme::spain, Scheme::sp});
    int ft_ok = 0, ab_ok = 0;
    std::string d = "fattree:";
    for (int seed = 1; seed <= 3; ++seed) {
        double c = ft.runs.at({"contra", seed}).fct_mean_us, e = ft.runs.at({"ecmp", seed}).fct_mean_us,
               h = ft.runs.at({"hula", seed}).fct_mean_us;
        bool ok = c <= 0.8 * e && std::abs(c - h) <= 0.05 * h;
        ft_ok += ok;
        d += " s" + std::to_string(seed) + " C/ECMP=" + fmt(c / e) + " |C-H|/H=" + fmt(std::abs(c - h) / h) +
             (ok ? "" : "(x)");
    }
    d += "; abilene:";
    for (int seed = 1; seed <= 3; ++seed) {
        double c = ab.runs.at({"contra", seed}).fct_mean_us, s = ab.runs.at({"spain", seed}).fct_mean_us,
               p = ab.runs.at({"sp", seed}).fct_mean_us;
        bool ok = c < s && s < p;
        ab_ok += ok;
        d += " s" + std::to_string(seed) + " C=" + fmt(c, 0) + " SPAIN=" + fmt(s, 0) + " SP=" + fmt(p, 0) +
             (ok ? "" : "(x)");
    }
    d += "; wall " + fmt(ft.secs, 1) + "s/" + fmt(ab.secs, 1) + "s";
    return {ft_ok >= 2 && ab_ok >= 2 && ft.secs <= 120 && ab.secs <= 120, d};
}

Outcome overhead() {
    const auto& ft = fattree_runs();
    bool ok = true;
    std::string d;
    for (int seed = 1; seed <= 3; ++seed) {
        const auto& r = ft.runs.at({"contra", seed});
        ok = ok && r.probe_overhead <= 0.02 && r.looped_fraction <= 0.001;
        d += (seed > 1 ? "; " : "") + std::string("s") + std::to_string(seed) +
             " probes=" + fmt(100 * r.probe_overhead, 3) + "% looped=" + fmt(100 * r.looped_fraction, 4) + "%";
    }
    return {ok, d + " (limits 2%, 0.1%)"};
}

// ------------------------------------------------------------------ 10

Outcome compiler_scaling() {
    bool ok = true;
    std::string d;
    std::size_t max_state = 0;
    for (const char* pol : {"mu", "wp", "ca"}) {
        std::vector<double> xs, ys;
        double t200 = 0;
        for (int n = 20; n <= 200; n += 20) {
            auto t = make_random(n, 4, static_cast<std::uint64_t>(n));
            const std::string text = harness::policy_text(pol);
            double best = 1e9;
            for (int rep = 0; rep < 3; ++rep) {
                auto t0 = Clock::now();
                auto c = compile_policy(text, t);
                auto cfgs = switch_configs(c, t);
                best = std::min(best, seconds_since(t0));
                for (const auto& s : cfgs) max_state = std::max(max_state, s.state_bytes);
            }
            xs.push_back(std::log(n));
            ys.push_back(std::log(best));
            if (n == 200) t200 = best;
        }
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(ys.size());
        double num = 0, den = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) num += (xs[i] - mx) * (ys[i] - my), den += (xs[i] - mx) * (xs[i] - mx);
        double slope = num / den;
        ok = ok && slope <= 2.0 && t200 < 60;
        d += std::string(pol) + " exponent=" + fmt(slope, 2) + " t(200)=" + fmt(t200 * 1e3, 1) + "ms; ";
    }
    ok = ok && max_state < 70'000;
    return {ok, d + "max state " + std::to_string(max_state) + " B/switch"};
}

// ------------------------------------------------------------------ 11

Outcome unit_suites() {
    const std::string filter =
        "AutomataOracle.*:RankOrder.*:FalsifierSoundness.*:SimulatorDeterminism.*";
    const std::string cmd = std::string(CONTRA_UNIT_TESTS) + " --gtest_brief=1 --gtest_filter='" + filter + "' 2>&1";
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) return {false, "cannot start " + std::string(CONTRA_UNIT_TESTS)};
    std::string out, passed_line;
    char buf[512];
    while (fgets(buf, sizeof buf, f)) {
        std::string line(buf);
        out += line;
        if (line.find("[  PASSED  ]") != std::string::npos) passed_line = line;
    }
    int rc = pclose(f);
    if (!passed_line.empty() && passed_line.back() == '\n') passed_line.pop_back();
    bool ok = rc == 0 && !passed_line.empty() && passed_line.find(" 0 tests") == std::string::npos;
    return {ok, ok ? passed_line.substr(passed_line.find(']') + 2) : "exit status " + std::to_string(rc)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"fig6-golden", fig6_golden},
        {"oracle-equivalence", oracle_equivalence},
        {"loop-freedom", loop_freedom},
        {"policy-compliance", policy_compliance},
        {"flowlet-zigzag", zigzag_guard},
        {"probe-period", probe_period_rule},
        {"failure-recovery", failure_recovery},
        {"fct-ordering", fct_ordering},
        {"overhead", overhead},
        {"compiler-scaling", compiler_scaling},
        {"unit-properties", unit_suites},
    };
    int failed = 0, i = 0;
    for (const auto& c : criteria) {
        ++i;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << std::setw(2) << i << " " << c.name << ": " << o.detail
                  << std::endl;
    }
    std::cout << (11 - failed) << "/11 criteria passed" << std::endl;
    return failed;
}
