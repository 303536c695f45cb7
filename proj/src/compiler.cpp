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

#include "contra/compiler.hpp"

#include <algorithm>

namespace contra {

CompiledPolicy compile_policy(const Policy& policy, const Topology& topo, const CompileOptions& opts) {
    CompiledPolicy c;
    c.policy = policy;
    c.report = analyze(policy, opts.falsifier);
    c.decomposition = decompose(policy, c.report);
    for (const auto& r : policy.regexes) c.dfas.push_back(compile_regex(*reverse_regex(r), topo.names()));
    c.pg = build_product_graph(topo, c.dfas, policy);
    return c;
}

CompiledPolicy compile_policy(const std::string& text, const Topology& topo, const CompileOptions& opts) {
    return compile_policy(parse_policy(text, topo.names()), topo, opts);
}

namespace {

bool regex_only(const Test& t) {
    switch (t.kind) {
        case Test::Kind::regex: return true;
        case Test::Kind::le:
        case Test::Kind::lt: return false;
        case Test::Kind::negate: return regex_only(*t.a);
        default: return regex_only(*t.a) && regex_only(*t.b);
    }
}

bool has_regex(const Test& t) {
    switch (t.kind) {
        case Test::Kind::regex: return true;
        case Test::Kind::le:
        case Test::Kind::lt: return false;
        case Test::Kind::negate: return has_regex(*t.a);
        default: return has_regex(*t.a) || has_regex(*t.b);
    }
}

ExprPtr erase(const ExprPtr& e) {
    if (e->kind == Expr::Kind::cond) {
        if (has_regex(*e->test)) {
            if (!regex_only(*e->test)) throw std::invalid_argument("cannot erase a regex mixed with a comparison");
            ExprPtr a = erase(e->items[0]);
            ExprPtr b = erase(e->items[1]);
            // Any verdict mask works here: the erased branches carry no regexes.
            return can_be_finite(*a, 0) ? a : b;
        }
    }
    if (e->items.empty()) return e;
    auto copy = std::make_shared<Expr>(*e);
    for (auto& it : copy->items) it = erase(it);
    return copy;
}

}  // namespace

Policy erase_regex_tests(const Policy& policy) {
    Policy p;
    p.root = erase(policy.root);
    p.arity = policy.arity;
    p.source = print_policy(p);
    return p;
}

std::vector<SwitchStaticConfig> switch_configs(const CompiledPolicy& c, const Topology& topo, const StateModel& model) {
    const auto& pg = c.pg;
    const auto& dec = c.decomposition;
    std::size_t valid_dsts = static_cast<std::size_t>(
        std::count_if(pg.sender.begin(), pg.sender.end(), [](int s) { return s >= 0; }));
    std::size_t slots = 0;
    for (const auto& sp : dec.subpolicies) slots += sp.pareto ? model.pareto_cap : 1;
    const std::size_t node_bytes = topo.num_nodes() <= 256 ? 1 : 2;
    const std::size_t tag_bytes = pg.tag_bits <= 8 ? 1 : 2;
    const std::size_t mv_bytes = 4 * std::max<std::size_t>(1, dec.carried_attrs.size());
    // key: dst, tag, pid, slot; value: mv, ntag, nhop, nslot, version
    const std::size_t fwd_entry = node_bytes + tag_bytes + 1 + 1 + mv_bytes + tag_bytes + node_bytes + 1 + 4;
    const std::size_t best_entry = node_bytes + tag_bytes + 2;
    const std::size_t flowlet_entry = tag_bytes + 1 + 4 + node_bytes + tag_bytes + 1 + 4;
    const std::size_t loop_entry = 4 + 1 + 1 + 4;

    std::vector<SwitchStaticConfig> out;
    for (int x = 0; x < topo.num_nodes(); ++x) {
        SwitchStaticConfig sc;
        sc.node = x;
        sc.tags = pg.by_loc[static_cast<std::size_t>(x)];
        for (int id : sc.tags) {
            sc.out.push_back(pg.succ[static_cast<std::size_t>(id)]);
            sc.in.push_back(pg.pred[static_cast<std::size_t>(id)]);
        }
        sc.probe_sender = pg.sender[static_cast<std::size_t>(x)] >= 0;
        sc.fwd_entries = valid_dsts * sc.tags.size() * slots;
        std::size_t edges = 0;
        for (const auto& o : sc.out) edges += o.size();
        sc.state_bytes = sc.fwd_entries * fwd_entry + valid_dsts * best_entry + model.flowlet_entries * flowlet_entry +
                         model.loop_entries * loop_entry + edges * (tag_bytes + node_bytes + tag_bytes) +
                         topo.out_links(x).size() * 8;
        out.push_back(std::move(sc));
    }
    return out;
}

nlohmann::json bundle_json(const CompiledPolicy& c, const Topology& topo, const StateModel& model) {
    using nlohmann::json;
    json j;
    j["format"] = "contra-bundle";
    j["version"] = 1;
    j["policy"] = print_policy(c.policy);
    j["arity"] = c.policy.arity;
    json regs = json::array();
    for (std::size_t i = 0; i < c.policy.regexes.size(); ++i)
        regs.push_back({{"id", i},
                        {"regex", regex_to_string(*c.policy.regexes[i])},
                        {"states", c.dfas[i].num_states},
                        {"garbage", c.dfas[i].garbage}});
    j["regexes"] = regs;

    json analysis;
    analysis["monotone"] = c.report.monotone;
    analysis["isotone"] = c.report.isotone;
    json viol = json::array();
    for (const auto& v : c.report.violations) {
        json jv{{"property", v.property},
                {"loc", std::to_string(v.loc.line) + ":" + std::to_string(v.loc.column)},
                {"locus", v.locus},
                {"reason", v.reason}};
        if (v.counterexample) jv["counterexample"] = v.counterexample->str();
        viol.push_back(jv);
    }
    analysis["violations"] = viol;
    analysis["warnings"] = c.report.warnings;
    j["analysis"] = analysis;

    json dec;
    json pids = json::array();
    for (const auto& sp : c.decomposition.subpolicies)
        pids.push_back({{"pid", sp.pid}, {"rank", print_expr(*sp.branch_rank)}, {"pareto", sp.pareto}});
    dec["pids"] = pids;
    json attrs = json::array();
    for (Attr a : c.decomposition.carried_attrs) attrs.push_back(attr_name(a));
    dec["carried_attrs"] = attrs;
    j["decomposition"] = dec;

    json nodes = json::array();
    for (std::size_t i = 0; i < c.pg.nodes.size(); ++i) {
        const auto& n = c.pg.nodes[i];
        json succ = json::array();
        for (int m : c.pg.succ[i]) succ.push_back(c.pg.label(topo, m));
        nodes.push_back({{"id", i},
                         {"label", c.pg.label(topo, static_cast<int>(i))},
                         {"location", topo.name(n.loc)},
                         {"tag", n.tag},
                         {"states", n.states},
                         {"accept", n.accept},
                         {"out", succ}});
    }
    j["product_graph"] = {{"nodes", nodes}, {"tag_bits", c.pg.tag_bits}};

    json switches = json::object();
    for (const auto& sc : switch_configs(c, topo, model)) {
        json tags = json::array();
        for (std::size_t t = 0; t < sc.tags.size(); ++t) {
            json out = json::array();
            for (int m : sc.out[t]) out.push_back(c.pg.label(topo, m));
            tags.push_back({{"tag", t}, {"out", out}, {"accept", c.pg.nodes[static_cast<std::size_t>(sc.tags[t])].accept}});
        }
        switches[topo.name(sc.node)] = {{"tags", tags},
                                        {"probe_sender", sc.probe_sender},
                                        {"fwd_entries", sc.fwd_entries},
                                        {"state_bytes", sc.state_bytes}};
    }
    j["switches"] = switches;
    j["tag_bits"] = c.pg.tag_bits;
    return j;
}

}  // namespace contra
