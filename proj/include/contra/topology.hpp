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
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contra/rational.hpp"

namespace contra {

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DirectedLink {
    int from = -1;
    int to = -1;
    std::int64_t capacity_bps = 0;
    std::int64_t latency_ns = 0;
};

// Undirected links are stored as two directed half-links; link ids 2i and
// 2i+1 are the two directions of the i-th declared link.
class Topology {
public:
    int add_node(const std::string& name);
    int node(const std::string& name) const;
    bool has_node(const std::string& name) const { return by_name_.count(name) != 0; }
    const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& names() const { return names_; }
    int num_nodes() const { return static_cast<int>(names_.size()); }

    void add_link(int a, int b, std::int64_t capacity_bps, std::int64_t latency_ns);
    const std::vector<DirectedLink>& links() const { return links_; }
    const DirectedLink& link(int id) const { return links_.at(static_cast<std::size_t>(id)); }
    int num_links() const { return static_cast<int>(links_.size()); }
    static int reverse(int link_id) { return link_id ^ 1; }

    // Outgoing half-link ids of `node`, in declaration order.
    const std::vector<int>& out_links(int node) const { return out_.at(static_cast<std::size_t>(node)); }
    int link_between(int from, int to) const;
    std::vector<int> neighbors(int node) const;

    void set_hosts(int node, int count);
    int hosts(int node) const;
    const std::map<int, int>& host_map() const { return hosts_; }

    // Scripted constant utilizations per directed link (in [0,1]).
    std::map<int, Rational> fixed_util;

    bool connected() const;
    // Hop distances between every pair (-1 when unreachable).
    std::vector<std::vector<int>> hop_distances() const;
    // Largest round-trip propagation delay over shortest-latency paths.
    std::int64_t max_rtt_ns() const;

private:
    std::vector<std::string> names_;
    std::map<std::string, int> by_name_;
    std::vector<DirectedLink> links_;
    std::vector<std::vector<int>> out_;
    std::map<int, int> hosts_;
};

// Line format:
//   <a> <b> <capacity_gbps> <latency_us>
//   host <node> <count>
//   util <from> <to> <value>
// `#` starts a comment.
Topology parse_topology(std::string_view text);
Topology load_topology(const std::string& path);

// k-ary fat tree with k^3/4 hosts, k/2 per edge switch. Switch names are
// c<i>, a<pod>_<i>, e<pod>_<i>.
Topology make_fattree(int k, std::int64_t capacity_bps = 10'000'000'000, std::int64_t latency_ns = 1'000,
                      int hosts_per_edge = -1);
// Connected random graph: spanning tree plus extra edges up to the given
// average degree. Node names are n<i>.
Topology make_random(int n, double avg_degree, std::uint64_t seed,
                     std::int64_t capacity_bps = 10'000'000'000, std::int64_t latency_ns = 10'000);
// 11-node backbone in the shape of the Abilene research network.
// uniform_latency_ns > 0 replaces the per-link propagation delays.
Topology make_abilene(std::int64_t capacity_bps = 10'000'000'000, std::int64_t uniform_latency_ns = 0);

}  // namespace contra
