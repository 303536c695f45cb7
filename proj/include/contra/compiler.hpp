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

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "contra/analysis.hpp"
#include "contra/automata.hpp"
#include "contra/policy.hpp"
#include "contra/product_graph.hpp"
#include "contra/topology.hpp"

namespace contra {

struct CompiledPolicy {
    Policy policy;
    AnalysisReport report;
    Decomposition decomposition;
    std::vector<Dfa> dfas;
    ProductGraph pg;
};

struct CompileOptions {
    FalsifierOptions falsifier;
};

// Parse-free entry point; throws DecompositionError for non-monotone input.
CompiledPolicy compile_policy(const Policy& policy, const Topology& topo, const CompileOptions& opts = {});
CompiledPolicy compile_policy(const std::string& text, const Topology& topo, const CompileOptions& opts = {});

// Replaces every regex-only conditional by a branch that can be finite
// (then-branch preferred), leaving a policy that ignores path shape.
Policy erase_regex_tests(const Policy& policy);

// Sizes used for the per-switch state estimate.
struct StateModel {
    std::size_t flowlet_entries = 1024;
    std::size_t loop_entries = 1024;
    std::size_t pareto_cap = 4;
};

struct SwitchStaticConfig {
    int node = -1;
    std::vector<int> tags;                      // PG ids at this location, by tag
    std::vector<std::vector<int>> out;          // per tag, successor PG ids
    std::vector<std::vector<int>> in;           // per tag, predecessor PG ids
    bool probe_sender = false;
    std::size_t fwd_entries = 0;
    std::size_t state_bytes = 0;
};

std::vector<SwitchStaticConfig> switch_configs(const CompiledPolicy& c, const Topology& topo,
                                               const StateModel& model = {});

// Versioned bundle: analysis, decomposition, product graph, per-switch config.
nlohmann::json bundle_json(const CompiledPolicy& c, const Topology& topo, const StateModel& model = {});

}  // namespace contra
