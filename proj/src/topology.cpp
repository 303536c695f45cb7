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

#include "contra/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace contra {

int Topology::add_node(const std::string& name) {
    auto it = by_name_.find(name);
    if (it != by_name_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    by_name_.emplace(name, id);
    out_.emplace_back();
    return id;
}

int Topology::node(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw TopologyError("unknown node '" + name + "'");
    return it->second;
}

void Topology::add_link(int a, int b, std::int64_t capacity_bps, std::int64_t latency_ns) {
    if (a == b) throw TopologyError("self-loop at " + name(a));
    if (capacity_bps <= 0 || latency_ns <= 0) throw TopologyError("link capacity and latency must be positive");
    if (link_between(a, b) >= 0) throw TopologyError("duplicate link " + name(a) + "-" + name(b));
    int id = static_cast<int>(links_.size());
    links_.push_back({a, b, capacity_bps, latency_ns});
    links_.push_back({b, a, capacity_bps, latency_ns});
    out_[static_cast<std::size_t>(a)].push_back(id);
    out_[static_cast<std::size_t>(b)].push_back(id + 1);
}

int Topology::link_between(int from, int to) const {
    for (int l : out_.at(static_cast<std::size_t>(from)))
        if (links_[static_cast<std::size_t>(l)].to == to) return l;
    return -1;
}

std::vector<int> Topology::neighbors(int node) const {
    std::vector<int> out;
    for (int l : out_links(node)) out.push_back(link(l).to);
    return out;
}

void Topology::set_hosts(int node, int count) {
    if (count < 0) throw TopologyError("negative host count");
    if (count == 0) hosts_.erase(node);
    else hosts_[node] = count;
}

int Topology::hosts(int node) const {
    auto it = hosts_.find(node);
    return it == hosts_.end() ? 0 : it->second;
}

std::vector<std::vector<int>> Topology::hop_distances() const {
    const int n = num_nodes();
    std::vector<std::vector<int>> d(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int s = 0; s < n; ++s) {
        auto& row = d[static_cast<std::size_t>(s)];
        std::deque<int> q{s};
        row[static_cast<std::size_t>(s)] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (int v : neighbors(u)) {
                if (row[static_cast<std::size_t>(v)] < 0) {
                    row[static_cast<std::size_t>(v)] = row[static_cast<std::size_t>(u)] + 1;
                    q.push_back(v);
                }
            }
        }
    }
    return d;
}

bool Topology::connected() const {
    if (num_nodes() == 0) return true;
    auto d = hop_distances();
    return std::all_of(d[0].begin(), d[0].end(), [](int x) { return x >= 0; });
}

std::int64_t Topology::max_rtt_ns() const {
    const int n = num_nodes();
    std::int64_t worst = 0;
    for (int s = 0; s < n; ++s) {
        std::vector<std::int64_t> dist(static_cast<std::size_t>(n), std::numeric_limits<std::int64_t>::max());
        using Item = std::pair<std::int64_t, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[static_cast<std::size_t>(s)] = 0;
        pq.push({0, s});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du != dist[static_cast<std::size_t>(u)]) continue;
            for (int l : out_links(u)) {
                const auto& lk = link(l);
                std::int64_t nd = du + lk.latency_ns;
                if (nd < dist[static_cast<std::size_t>(lk.to)]) {
                    dist[static_cast<std::size_t>(lk.to)] = nd;
                    pq.push({nd, lk.to});
                }
            }
        }
        for (auto x : dist)
            if (x != std::numeric_limits<std::int64_t>::max()) worst = std::max(worst, 2 * x);
    }
    return worst;
}

Topology parse_topology(std::string_view text) {
    Topology t;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    struct PendingUtil {
        std::string from, to;
        Rational value;
        int line;
    };
    std::vector<PendingUtil> utils;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> f;
        for (std::string w; ls >> w;) f.push_back(w);
        if (f.empty()) continue;
        auto bad = [&](const std::string& why) {
            return TopologyError("topology line " + std::to_string(lineno) + ": " + why);
        };
        try {
            if (f[0] == "host") {
                if (f.size() != 3) throw bad("expected 'host <node> <count>'");
                t.set_hosts(t.add_node(f[1]), std::stoi(f[2]));
            } else if (f[0] == "util") {
                if (f.size() != 4) throw bad("expected 'util <from> <to> <value>'");
                Rational v = Rational::parse(f[3]);
                if (v.is_negative() || v > Rational(1)) throw bad("utilization outside [0,1]");
                utils.push_back({f[1], f[2], v, lineno});
            } else {
                if (f.size() != 4) throw bad("expected '<a> <b> <capacity_gbps> <latency_us>'");
                double gbps = std::stod(f[2]);
                double us = std::stod(f[3]);
                int a = t.add_node(f[0]);
                int b = t.add_node(f[1]);
                t.add_link(a, b, static_cast<std::int64_t>(std::llround(gbps * 1e9)),
                           static_cast<std::int64_t>(std::llround(us * 1e3)));
            }
        } catch (const TopologyError&) {
            throw;
        } catch (const std::exception& e) {
            throw bad(e.what());
        }
    }
    for (const auto& u : utils) {
        int l = t.link_between(t.node(u.from), t.node(u.to));
        if (l < 0) throw TopologyError("topology line " + std::to_string(u.line) + ": no link " + u.from + "-" + u.to);
        t.fixed_util[l] = u.value;
    }
    return t;
}

Topology load_topology(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TopologyError("cannot open topology file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_topology(ss.str());
}

Topology make_fattree(int k, std::int64_t capacity_bps, std::int64_t latency_ns, int hosts_per_edge) {
    if (k < 2 || k % 2 != 0) throw TopologyError("fat tree arity must be even and >= 2");
    const int half = k / 2;
    if (hosts_per_edge < 0) hosts_per_edge = half;
    Topology t;
    std::vector<int> cores;
    for (int i = 0; i < half * half; ++i) cores.push_back(t.add_node("c" + std::to_string(i)));
    for (int p = 0; p < k; ++p) {
        std::vector<int> aggs, edges;
        for (int i = 0; i < half; ++i) aggs.push_back(t.add_node("a" + std::to_string(p) + "_" + std::to_string(i)));
        for (int i = 0; i < half; ++i) edges.push_back(t.add_node("e" + std::to_string(p) + "_" + std::to_string(i)));
        for (int e : edges) {
            for (int a : aggs) t.add_link(e, a, capacity_bps, latency_ns);
            t.set_hosts(e, hosts_per_edge);
        }
        for (int i = 0; i < half; ++i)
            for (int j = 0; j < half; ++j) t.add_link(aggs[i], cores[i * half + j], capacity_bps, latency_ns);
    }
    return t;
}

Topology make_random(int n, double avg_degree, std::uint64_t seed, std::int64_t capacity_bps,
                     std::int64_t latency_ns) {
    if (n < 2) throw TopologyError("random graph needs at least 2 nodes");
    std::mt19937_64 rng(seed);
    Topology t;
    for (int i = 0; i < n; ++i) t.add_node("n" + std::to_string(i));
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        t.add_link(i, pick(rng), capacity_bps, latency_ns);
    }
    const long target = std::lround(avg_degree * n / 2.0);
    const long max_edges = static_cast<long>(n) * (n - 1) / 2;
    long edges = n - 1;
    std::uniform_int_distribution<int> any(0, n - 1);
    while (edges < std::min(target, max_edges)) {
        int a = any(rng), b = any(rng);
        if (a == b || t.link_between(a, b) >= 0) continue;
        t.add_link(a, b, capacity_bps, latency_ns);
        ++edges;
    }
    return t;
}

Topology make_abilene(std::int64_t capacity_bps, std::int64_t uniform_latency_ns) {
    // City pairs and rough one-way propagation delays in microseconds.
    static const struct {
        const char* a;
        const char* b;
        int us;
    } kLinks[] = {
        {"SEA", "SNV", 600}, {"SEA", "DEN", 800},  {"SNV", "DEN", 700},  {"SNV", "LA", 300},
        {"LA", "HOU", 1100}, {"DEN", "KC", 500},   {"KC", "HOU", 600},   {"KC", "IND", 400},
        {"HOU", "ATL", 700}, {"IND", "ATL", 400},  {"IND", "CHI", 200},  {"CHI", "NY", 700},
        {"ATL", "DC", 500},  {"NY", "DC", 200},
    };
    Topology t;
    for (const auto& l : kLinks) {
        int a = t.add_node(l.a);
        int b = t.add_node(l.b);
        t.add_link(a, b, capacity_bps,
                   uniform_latency_ns > 0 ? uniform_latency_ns : static_cast<std::int64_t>(l.us) * 1000);
    }
    for (int i = 0; i < t.num_nodes(); ++i) t.set_hosts(i, 1);
    return t;
}

}  // namespace contra
