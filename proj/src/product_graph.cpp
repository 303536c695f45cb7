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

#include "contra/product_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace contra {

int ProductGraph::node_at(int loc, int tag) const {
    const auto& v = by_loc.at(static_cast<std::size_t>(loc));
    if (tag < 0 || tag >= static_cast<int>(v.size())) return -1;
    return v[static_cast<std::size_t>(tag)];
}

int ProductGraph::next(int node, int loc) const {
    for (int m : succ.at(static_cast<std::size_t>(node)))
        if (nodes[static_cast<std::size_t>(m)].loc == loc) return m;
    return -1;
}

int ProductGraph::max_tags() const {
    std::size_t m = 0;
    for (const auto& v : by_loc) m = std::max(m, v.size());
    return static_cast<int>(m);
}

std::string ProductGraph::label(const Topology& topo, int node) const {
    const auto& n = nodes.at(static_cast<std::size_t>(node));
    return topo.name(n.loc) + std::to_string(n.tag);
}

namespace {

struct RawGraph {
    std::map<std::pair<int, std::vector<int>>, int> ids;
    std::vector<PgNode> nodes;
    std::vector<std::vector<int>> succ;

    int intern(int loc, std::vector<int> states, const std::vector<Dfa>& dfas) {
        auto key = std::make_pair(loc, states);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(nodes.size());
        PgNode n;
        n.loc = loc;
        n.states = std::move(states);
        for (std::size_t i = 0; i < dfas.size(); ++i)
            if (dfas[i].accepts(n.states[i])) n.accept |= VerdictMask{1} << i;
        nodes.push_back(std::move(n));
        succ.emplace_back();
        ids.emplace(std::move(key), id);
        return id;
    }
};

// Garbage sorts lowest so partially matched states come after it.
std::vector<int> state_key(const PgNode& n, const std::vector<Dfa>& dfas) {
    std::vector<int> k;
    for (std::size_t i = 0; i < dfas.size(); ++i) k.push_back(n.states[i] == dfas[i].garbage ? -1 : n.states[i]);
    return k;
}

}  // namespace

ProductGraph build_product_graph(const Topology& topo, const std::vector<Dfa>& dfas, const Policy& policy) {
    if (dfas.size() != policy.regexes.size()) throw ProductGraphError("automaton count does not match the policy");
    for (const auto& d : dfas)
        if (d.alphabet != topo.names()) throw ProductGraphError("automaton alphabet differs from topology nodes");
    const int n_loc = topo.num_nodes();

    // Full product reachable from every candidate sender.
    RawGraph raw;
    std::vector<int> raw_sender(static_cast<std::size_t>(n_loc));
    for (int x = 0; x < n_loc; ++x) {
        std::vector<int> s;
        for (const auto& d : dfas) s.push_back(d.step(d.initial, x));
        raw_sender[static_cast<std::size_t>(x)] = raw.intern(x, std::move(s), dfas);
    }
    for (std::size_t cur = 0; cur < raw.nodes.size(); ++cur) {
        const int loc = raw.nodes[cur].loc;
        for (int y : topo.neighbors(loc)) {
            std::vector<int> s;
            for (std::size_t i = 0; i < dfas.size(); ++i) s.push_back(dfas[i].step(raw.nodes[cur].states[i], y));
            int to = raw.intern(y, std::move(s), dfas);
            raw.succ[cur].push_back(to);
        }
    }
    const std::size_t n_raw = raw.nodes.size();
    std::vector<char> good(n_raw, 0);
    for (std::size_t i = 0; i < n_raw; ++i) good[i] = can_be_finite(*policy.root, raw.nodes[i].accept) ? 1 : 0;

    // Per destination: keep nodes that are reachable without returning to
    // the destination and that lead to a finite-capable node.
    std::vector<char> keep(n_raw, 0);
    std::vector<int> valid_sender(static_cast<std::size_t>(n_loc), -1);
    std::vector<char> reach(n_raw), useful(n_raw);
    std::vector<std::vector<int>> raw_pred(n_raw);
    for (std::size_t i = 0; i < n_raw; ++i)
        for (int j : raw.succ[i]) raw_pred[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
    for (int x = 0; x < n_loc; ++x) {
        const int s = raw_sender[static_cast<std::size_t>(x)];
        std::fill(reach.begin(), reach.end(), 0);
        std::fill(useful.begin(), useful.end(), 0);
        std::vector<int> order{s};
        reach[static_cast<std::size_t>(s)] = 1;
        for (std::size_t k = 0; k < order.size(); ++k)
            for (int m : raw.succ[static_cast<std::size_t>(order[k])])
                if (!reach[static_cast<std::size_t>(m)] && raw.nodes[static_cast<std::size_t>(m)].loc != x) {
                    reach[static_cast<std::size_t>(m)] = 1;
                    order.push_back(m);
                }
        std::vector<int> stack;
        for (int m : order)
            if (m != s && good[static_cast<std::size_t>(m)]) {
                useful[static_cast<std::size_t>(m)] = 1;
                stack.push_back(m);
            }
        if (stack.empty()) continue;
        while (!stack.empty()) {
            int m = stack.back();
            stack.pop_back();
            for (int p : raw_pred[static_cast<std::size_t>(m)])
                if (reach[static_cast<std::size_t>(p)] && !useful[static_cast<std::size_t>(p)] &&
                    (p == s || raw.nodes[static_cast<std::size_t>(p)].loc != x)) {
                    useful[static_cast<std::size_t>(p)] = 1;
                    stack.push_back(p);
                }
        }
        valid_sender[static_cast<std::size_t>(x)] = s;
        for (std::size_t i = 0; i < n_raw; ++i)
            if (useful[i]) keep[i] = 1;
    }

    // Merge nodes at one location with equal out-edges and accept sets.
    std::vector<int> cls(n_raw, -1);
    for (std::size_t i = 0; i < n_raw; ++i)
        if (keep[i]) cls[i] = static_cast<int>(i);
    for (bool changed = true; changed;) {
        changed = false;
        std::map<std::tuple<int, VerdictMask, std::vector<int>>, int> sig;
        for (std::size_t i = 0; i < n_raw; ++i) {
            if (!keep[i]) continue;
            std::vector<int> out;
            for (int m : raw.succ[i])
                if (keep[static_cast<std::size_t>(m)]) out.push_back(cls[static_cast<std::size_t>(m)]);
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            auto key = std::make_tuple(raw.nodes[i].loc, raw.nodes[i].accept, std::move(out));
            auto [it, inserted] = sig.emplace(std::move(key), cls[i]);
            if (!inserted && it->second != cls[i]) {
                int a = std::min(it->second, cls[i]);
                int b = std::max(it->second, cls[i]);
                for (auto& c : cls)
                    if (c == b) c = a;
                it->second = a;
                changed = true;
            }
        }
    }

    // Distance from the nearest valid sender orders tags within a location.
    std::vector<int> dist(n_raw, std::numeric_limits<int>::max());
    std::deque<int> q;
    for (int s : valid_sender)
        if (s >= 0 && keep[static_cast<std::size_t>(s)]) {
            dist[static_cast<std::size_t>(cls[static_cast<std::size_t>(s)])] = 0;
            q.push_back(cls[static_cast<std::size_t>(s)]);
        }
    // BFS over classes; each class is represented by its lowest raw id.
    std::vector<std::vector<int>> members(n_raw);
    for (std::size_t i = 0; i < n_raw; ++i)
        if (keep[i]) members[static_cast<std::size_t>(cls[i])].push_back(static_cast<int>(i));
    while (!q.empty()) {
        int c = q.front();
        q.pop_front();
        for (int i : members[static_cast<std::size_t>(c)])
            for (int m : raw.succ[static_cast<std::size_t>(i)]) {
                if (!keep[static_cast<std::size_t>(m)]) continue;
                int mc = cls[static_cast<std::size_t>(m)];
                if (dist[static_cast<std::size_t>(mc)] == std::numeric_limits<int>::max()) {
                    dist[static_cast<std::size_t>(mc)] = dist[static_cast<std::size_t>(c)] + 1;
                    q.push_back(mc);
                }
            }
    }

    std::vector<int> reps;
    for (std::size_t i = 0; i < n_raw; ++i)
        if (keep[i] && cls[i] == static_cast<int>(i)) reps.push_back(static_cast<int>(i));
    std::sort(reps.begin(), reps.end(), [&](int a, int b) {
        const auto& na = raw.nodes[static_cast<std::size_t>(a)];
        const auto& nb = raw.nodes[static_cast<std::size_t>(b)];
        if (na.loc != nb.loc) return na.loc < nb.loc;
        if (dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)])
            return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
        return state_key(na, dfas) < state_key(nb, dfas);
    });

    ProductGraph pg;
    std::vector<int> new_id(n_raw, -1);
    pg.by_loc.assign(static_cast<std::size_t>(n_loc), {});
    for (int r : reps) {
        int id = static_cast<int>(pg.nodes.size());
        new_id[static_cast<std::size_t>(r)] = id;
        PgNode n = raw.nodes[static_cast<std::size_t>(r)];
        auto& slot = pg.by_loc[static_cast<std::size_t>(n.loc)];
        n.tag = static_cast<int>(slot.size());
        slot.push_back(id);
        pg.nodes.push_back(std::move(n));
    }
    pg.succ.assign(pg.nodes.size(), {});
    pg.pred.assign(pg.nodes.size(), {});
    for (std::size_t i = 0; i < n_raw; ++i) {
        if (!keep[i]) continue;
        int from = new_id[static_cast<std::size_t>(cls[i])];
        for (int m : raw.succ[i]) {
            if (!keep[static_cast<std::size_t>(m)]) continue;
            int to = new_id[static_cast<std::size_t>(cls[static_cast<std::size_t>(m)])];
            auto& out = pg.succ[static_cast<std::size_t>(from)];
            if (std::find(out.begin(), out.end(), to) == out.end()) {
                out.push_back(to);
                pg.pred[static_cast<std::size_t>(to)].push_back(from);
            }
        }
    }
    for (auto& out : pg.succ)
        std::sort(out.begin(), out.end());
    for (auto& in : pg.pred)
        std::sort(in.begin(), in.end());
    pg.sender.assign(static_cast<std::size_t>(n_loc), -1);
    for (int x = 0; x < n_loc; ++x) {
        int s = valid_sender[static_cast<std::size_t>(x)];
        if (s >= 0 && keep[static_cast<std::size_t>(s)])
            pg.sender[static_cast<std::size_t>(x)] = new_id[static_cast<std::size_t>(cls[static_cast<std::size_t>(s)])];
    }
    int m = pg.max_tags();
    while ((1 << pg.tag_bits) < m) ++pg.tag_bits;
    return pg;
}

int probe_sending_state(const ProductGraph& pg, int dst) {
    if (dst < 0 || dst >= static_cast<int>(pg.sender.size())) throw ProductGraphError("unknown destination");
    int s = pg.sender[static_cast<std::size_t>(dst)];
    if (s < 0) throw ProductGraphError("node is not a valid destination under the policy");
    return s;
}

std::set<std::vector<int>> enumerate_compliant_paths(const ProductGraph& pg, const Policy& policy, int src, int dst,
                                                     int max_hops, bool simple_only) {
    std::set<std::vector<int>> out;
    int s = dst >= 0 && dst < static_cast<int>(pg.sender.size()) ? pg.sender[static_cast<std::size_t>(dst)] : -1;
    if (s < 0) return out;
    if (src == dst) {
        if (can_be_finite(*policy.root, pg.nodes[static_cast<std::size_t>(s)].accept)) out.insert({src});
        return out;
    }
    std::vector<int> locs{dst};
    std::vector<int> visits(pg.by_loc.size(), 0);
    visits[static_cast<std::size_t>(dst)] = 1;
    std::function<void(int)> dfs = [&](int node) {
        const auto& n = pg.nodes[static_cast<std::size_t>(node)];
        if (n.loc == src && can_be_finite(*policy.root, n.accept)) {
            out.insert(std::vector<int>(locs.rbegin(), locs.rend()));
        }
        if (static_cast<int>(locs.size()) - 1 >= max_hops) return;
        for (int m : pg.succ[static_cast<std::size_t>(node)]) {
            int loc = pg.nodes[static_cast<std::size_t>(m)].loc;
            if (loc == dst) continue;
            if (simple_only && visits[static_cast<std::size_t>(loc)]) continue;
            ++visits[static_cast<std::size_t>(loc)];
            locs.push_back(loc);
            dfs(m);
            locs.pop_back();
            --visits[static_cast<std::size_t>(loc)];
        }
    };
    dfs(s);
    return out;
}

VerdictMask path_verdicts(const std::vector<Dfa>& dfas, const Topology& topo, const std::vector<int>& path) {
    VerdictMask v = 0;
    for (std::size_t i = 0; i < dfas.size(); ++i) {
        int q = dfas[i].initial;
        for (auto it = path.rbegin(); it != path.rend(); ++it) q = dfas[i].step(q, *it);
        if (dfas[i].accepts(q)) v |= VerdictMask{1} << i;
    }
    (void)topo;
    return v;
}

std::string dump_product_graph(const ProductGraph& pg, const Topology& topo) {
    std::ostringstream os;
    for (std::size_t i = 0; i < pg.nodes.size(); ++i) {
        const auto& n = pg.nodes[i];
        os << pg.label(topo, static_cast<int>(i)) << " (";
        for (std::size_t k = 0; k < n.states.size(); ++k) os << (k ? "," : "") << n.states[k];
        os << ") accept=" << n.accept;
        if (pg.sender[static_cast<std::size_t>(n.loc)] == static_cast<int>(i)) os << " sender";
        os << " ->";
        for (int m : pg.succ[i]) os << ' ' << pg.label(topo, m);
        os << '\n';
    }
    return os.str();
}

}  // namespace contra
