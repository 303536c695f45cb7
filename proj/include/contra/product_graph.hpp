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

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "contra/automata.hpp"
#include "contra/policy.hpp"
#include "contra/topology.hpp"

namespace contra {

class ProductGraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PgNode {
    int loc = -1;
    std::vector<int> states;  // one per automaton
    int tag = -1;
    VerdictMask accept = 0;   // bit i set iff automaton i accepts
};

// Edges point in probe direction (away from the destination). Node ids are
// ordered by (location, tag).
struct ProductGraph {
    std::vector<PgNode> nodes;
    std::vector<std::vector<int>> succ;
    std::vector<std::vector<int>> pred;
    std::vector<int> sender;               // per topology node, -1 if not a valid destination
    std::vector<std::vector<int>> by_loc;  // per topology node, PG ids indexed by tag
    int tag_bits = 0;

    int node_at(int loc, int tag) const;
    // Successor of `node` located at `loc`, or -1.
    int next(int node, int loc) const;
    int max_tags() const;
    std::string label(const Topology& topo, int node) const;  // e.g. "B1"
};

// Prunes nodes that cannot lie on a finite-rank path for any destination.
// `garbage` gives each automaton's dead state.
ProductGraph build_product_graph(const Topology& topo, const std::vector<Dfa>& dfas, const Policy& policy);

// Throws ProductGraphError when `dst` is not a valid destination.
int probe_sending_state(const ProductGraph& pg, int dst);

// Physical paths src..dst (traffic order) read off PG paths from dst's
// probe sender to a finite-capable node at src. Walks may revisit nodes
// other than dst when `simple_only` is false.
std::set<std::vector<int>> enumerate_compliant_paths(const ProductGraph& pg, const Policy& policy, int src, int dst,
                                                     int max_hops, bool simple_only = true);

// Regex verdicts of a physical path in traffic order.
VerdictMask path_verdicts(const std::vector<Dfa>& dfas, const Topology& topo, const std::vector<int>& path);

std::string dump_product_graph(const ProductGraph& pg, const Topology& topo);

}  // namespace contra
