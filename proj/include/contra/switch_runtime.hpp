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

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contra/compiler.hpp"

namespace contra {

struct Probe {
    int origin = -1;
    int pid = 0;
    int tag = 0;   // tag of the sending switch's PG node
    int slot = 0;  // frontier slot at the sender (pareto pids only)
    PathAttributes mv;
    std::uint32_t version = 0;
};

constexpr int kInitialTtl = 64;

struct PacketHeader {
    int dst = -1;
    int tag = -1;
    int pid = -1;
    int slot = 0;
    std::uint32_t fid = 0;       // flow hash
    std::uint32_t pkt_hash = 0;  // per packet and transmission attempt
    int ttl = kInitialTtl;
};

struct FwdKey {
    int dst = -1;
    int tag = -1;
    int pid = 0;
    int slot = 0;
    auto operator<=>(const FwdKey&) const = default;
};

struct FwdEntry {
    PathAttributes mv;
    int ntag = -1;
    int nhop = -1;
    int link = -1;  // egress half-link toward nhop
    int nslot = 0;
    std::uint32_t version = 0;
};

struct FlowletKey {
    int tag = 0;
    int pid = 0;
    std::uint32_t fid = 0;
    auto operator<=>(const FlowletKey&) const = default;
};

struct FlowletEntry {
    FwdKey key;  // table entry that started the flowlet
    int link = -1;
    int ntag = -1;
    int nslot = 0;
    std::int64_t t = 0;
};

struct LoopEntry {
    std::uint32_t hash = 0;
    int maxttl = 0;
    int minttl = 0;
    std::int64_t t = 0;
    bool used = false;
};

struct RuntimeConfig {
    std::int64_t probe_period_ns = 256'000;
    std::int64_t flowlet_timeout_ns = 200'000;  // 0 disables flowlet pinning
    int k_failure = 3;
    int delta_threshold = 4;
    bool versioning = true;
    bool policy_aware_flowlets = true;
    bool loop_detection = true;
    bool shortest_only = false;  // probes only move away from their origin
    std::size_t pareto_cap = 4;
    std::size_t loop_table_size = 1024;
    std::int64_t loop_entry_window_ns = 2'000'000;
};

struct RuntimeCounters {
    std::uint64_t probes_sent = 0;
    std::uint64_t probes_received = 0;
    std::uint64_t probes_discarded_stale = 0;
    std::uint64_t probes_not_better = 0;
    std::uint64_t probes_unresolved = 0;
    std::uint64_t packets_forwarded = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_unroutable = 0;
    std::uint64_t packets_ttl_expired = 0;
    std::uint64_t flowlet_flushes = 0;
    std::uint64_t loop_detections = 0;
    std::uint64_t failure_detections = 0;
    std::uint64_t pareto_overflows = 0;
};

struct OutProbe {
    int link = -1;
    Probe probe;
};

struct Decision {
    enum class Kind { deliver, send, drop_unroutable, drop_ttl };
    Kind kind = Kind::drop_unroutable;
    int link = -1;
    int tag = -1;  // tag of the table entry used at this switch
};

// Per-switch protocol state machine.
class SwitchRuntime {
public:
    using UtilFn = std::function<Rational(int link)>;

    SwitchRuntime(int node, const CompiledPolicy& compiled, const Topology& topo, RuntimeConfig cfg);

    int node() const { return node_; }

    std::vector<OutProbe> init_probes(std::uint32_t version, std::int64_t now);
    // `in_link` is the half-link the probe travelled on (neighbor -> this).
    std::vector<OutProbe> process_probe(Probe p, int in_link, std::int64_t now, const UtilFn& util);
    Decision forward_packet(PacketHeader& pkt, bool from_host, std::int64_t now);

    bool check_link_failed(int link, std::int64_t now) const;
    // Marks links with no recent probes as failed; returns newly failed links.
    std::vector<int> check_liveness(std::int64_t now);
    bool link_marked_failed(int link) const;
    std::int64_t last_probe(int link) const;

    // Rank of an entry under the full policy, read with its tag's verdicts.
    RankValue s_value(const FwdKey& key, const FwdEntry& e) const;
    RankValue f_value(int pid, const PathAttributes& mv) const;

    const std::map<FwdKey, FwdEntry>& fwd_table() const { return fwd_; }
    const std::map<int, FwdKey>& best_table() const { return best_; }
    const std::map<FlowletKey, FlowletEntry>& flowlet_table() const { return flowlets_; }
    const RuntimeCounters& counters() const { return counters_; }
    std::optional<FwdKey> best(int dst) const;

    std::string dump() const;

private:
    std::vector<OutProbe> multicast(int pg_node, const Probe& p);
    bool process_scalar(const Probe& p, const FwdKey& key, int nhop, int link, std::int64_t now);
    std::optional<int> process_pareto(const Probe& p, const FwdKey& base, int nhop, int link);
    void recompute_best(int dst);
    bool entry_usable(const FwdKey& k, const FwdEntry& e) const;
    void invalidate_link(int link);
    std::string tag_label(int loc, int tag) const;

    int node_;
    const CompiledPolicy& c_;
    const Topology& topo_;
    RuntimeConfig cfg_;
    std::vector<std::vector<int>> hops_;  // only with shortest_only

    std::map<FwdKey, FwdEntry> fwd_;
    std::map<int, FwdKey> best_;
    std::map<int, std::uint32_t> latest_;  // newest version seen per origin
    std::map<FlowletKey, FlowletEntry> flowlets_;
    std::vector<LoopEntry> loops_;
    std::map<int, std::int64_t> last_probe_;  // per egress link
    std::map<int, bool> failed_;
    RuntimeCounters counters_;
};

}  // namespace contra
